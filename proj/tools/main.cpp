#include "accel/app.hpp"

int main(int argc, char** argv) { return accel::app::run(argc, argv); }
