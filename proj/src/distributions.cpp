#include "accel/distributions.hpp"

#include <cctype>
#include <cmath>
#include <limits>
#include <sstream>
#include <stdexcept>

#include "accel/math.hpp"

namespace accel::dist {

namespace {

constexpr double kNegInf = -std::numeric_limits<double>::infinity();

void check(bool ok, const char* message) {
    if (!ok) throw std::invalid_argument(message);
}

double log_density1(const Exponential& e, double x) {
    if (x < 0.0) return kNegInf;
    return std::log(e.rate) - e.rate * x;
}

double log_density1(const Pareto& p, double x) {
    if (x < p.scale) return kNegInf;
    return std::log(p.shape) + p.shape * std::log(p.scale) - (p.shape + 1.0) * std::log(x);
}

double log_density1(const GaussianUV& g, double x) {
    const double z = (x - g.mean) / g.sd;
    return -0.5 * z * z - std::log(g.sd) - 0.5 * std::log(2.0 * std::numbers::pi);
}

double sample_scalar(const Distribution& d, rng::RngStream& stream);

// Draws one point, consuming `stream` sequentially (one uniform per scalar
// coordinate; all families sample by inverse CDF).
void sample_point(const Distribution& d, rng::RngStream& stream, Eigen::VectorXd& out,
                  Eigen::Index& offset) {
    if (const auto* prod = std::get_if<Product>(&d.value())) {
        for (const auto& c : prod->components) sample_point(c, stream, out, offset);
    } else {
        out[offset++] = sample_scalar(d, stream);
    }
}

double sample_scalar(const Distribution& d, rng::RngStream& stream) {
    return quantile1(d, stream.next_uniform());
}

}  // namespace

Distribution::Distribution(Exponential e) : value_(e) {
    check(e.rate > 0.0, "exponential: rate must be > 0");
}

Distribution::Distribution(Pareto p) : value_(p) {
    check(p.scale > 0.0, "pareto: scale must be > 0");
    check(p.shape > 0.0, "pareto: shape must be > 0");
}

Distribution::Distribution(GaussianUV g) : value_(g) {
    check(std::isfinite(g.mean), "gaussian: mean must be finite");
    check(g.sd > 0.0, "gaussian: sd must be > 0");
}

Distribution::Distribution(Product p) : value_(std::move(p)) {
    check(!std::get<Product>(value_).components.empty(), "product: needs at least one component");
}

Eigen::Index Distribution::dim() const {
    if (const auto* prod = std::get_if<Product>(&value_)) {
        Eigen::Index d = 0;
        for (const auto& c : prod->components) d += c.dim();
        return d;
    }
    return 1;
}

double log_density(const Distribution& d, const Eigen::VectorXd& x) {
    if (x.size() != d.dim()) throw std::invalid_argument("log_density: dimension mismatch");
    if (const auto* prod = std::get_if<Product>(&d.value())) {
        double total = 0.0;
        Eigen::Index offset = 0;
        for (const auto& c : prod->components) {
            const Eigen::Index cd = c.dim();
            total += log_density(c, x.segment(offset, cd));
            if (total == kNegInf) return kNegInf;
            offset += cd;
        }
        return total;
    }
    return std::visit(
        [&](const auto& fam) -> double {
            if constexpr (std::is_same_v<std::decay_t<decltype(fam)>, Product>) {
                return kNegInf;  // unreachable
            } else {
                return log_density1(fam, x[0]);
            }
        },
        d.value());
}

double density(const Distribution& d, const Eigen::VectorXd& x) {
    const double ld = log_density(d, x);
    return (ld == kNegInf) ? 0.0 : std::exp(ld);
}

double density1(const Distribution& d, double x) {
    Eigen::VectorXd v(1);
    v[0] = x;
    return density(d, v);
}

double cdf1(const Distribution& d, double x) {
    return std::visit(
        [&](const auto& fam) -> double {
            using T = std::decay_t<decltype(fam)>;
            if constexpr (std::is_same_v<T, Exponential>) {
                return (x <= 0.0) ? 0.0 : 1.0 - std::exp(-fam.rate * x);
            } else if constexpr (std::is_same_v<T, Pareto>) {
                return (x <= fam.scale) ? 0.0 : 1.0 - std::pow(fam.scale / x, fam.shape);
            } else if constexpr (std::is_same_v<T, GaussianUV>) {
                return math::normal_cdf((x - fam.mean) / fam.sd);
            } else {
                throw std::invalid_argument("cdf1: not a scalar family");
            }
        },
        d.value());
}

double quantile1(const Distribution& d, double u) {
    if (!(u > 0.0 && u < 1.0)) throw std::invalid_argument("quantile1: u must lie in (0, 1)");
    return std::visit(
        [&](const auto& fam) -> double {
            using T = std::decay_t<decltype(fam)>;
            if constexpr (std::is_same_v<T, Exponential>) {
                return -std::log1p(-u) / fam.rate;
            } else if constexpr (std::is_same_v<T, Pareto>) {
                return fam.scale * std::pow(1.0 - u, -1.0 / fam.shape);
            } else if constexpr (std::is_same_v<T, GaussianUV>) {
                return fam.mean + fam.sd * math::normal_quantile(u);
            } else {
                throw std::invalid_argument("quantile1: not a scalar family");
            }
        },
        d.value());
}

Eigen::MatrixXd sample(const Distribution& d, const rng::RngStream& stream, Eigen::Index n) {
    if (n < 1) throw std::invalid_argument("sample: need n >= 1");
    const Eigen::Index dim = d.dim();
    Eigen::MatrixXd out(n, dim);
    Eigen::VectorXd point(dim);
    for (Eigen::Index i = 0; i < n; ++i) {
        rng::RngStream sub = stream.substream(static_cast<std::uint64_t>(i));
        Eigen::Index offset = 0;
        sample_point(d, sub, point, offset);
        out.row(i) = point.transpose();
    }
    return out;
}

double log_likelihood_ratio(const Distribution& f, const Distribution& f_star,
                            const Eigen::VectorXd& x) {
    const double lf = log_density(f, x);
    if (lf == kNegInf) return kNegInf;  // ratio 0
    const double lg = log_density(f_star, x);
    if (lg == kNegInf) {
        std::ostringstream os;
        os << "likelihood_ratio: importance density vanishes at a point with positive "
              "nominal density: x = [";
        for (Eigen::Index i = 0; i < x.size(); ++i) os << (i ? ", " : "") << x[i];
        os << "]";
        throw std::domain_error(os.str());
    }
    return lf - lg;
}

double likelihood_ratio(const Distribution& f, const Distribution& f_star,
                        const Eigen::VectorXd& x) {
    const double lr = log_likelihood_ratio(f, f_star, x);
    return (lr == kNegInf) ? 0.0 : std::exp(lr);
}

namespace {

struct Parser {
    std::string_view text;
    std::size_t pos = 0;

    void skip_ws() {
        while (pos < text.size() && (std::isspace(static_cast<unsigned char>(text[pos])) ||
                                     text[pos] == ','))
            ++pos;
    }

    bool at_end() {
        skip_ws();
        return pos >= text.size();
    }

    std::string word() {
        skip_ws();
        std::size_t start = pos;
        while (pos < text.size() && (std::isalnum(static_cast<unsigned char>(text[pos])) ||
                                     text[pos] == '_' || text[pos] == '.' || text[pos] == '-' ||
                                     text[pos] == '+' || text[pos] == 'e' || text[pos] == 'E'))
            ++pos;
        if (start == pos) {
            throw std::invalid_argument("distribution parse error near '" +
                                        std::string(text.substr(pos, 12)) + "'");
        }
        return std::string(text.substr(start, pos - start));
    }

    bool consume(char c) {
        skip_ws();
        if (pos < text.size() && text[pos] == c) {
            ++pos;
            return true;
        }
        return false;
    }

    double keyed_value(const std::string& key) {
        skip_ws();
        const std::string k = word();
        if (k != key) {
            throw std::invalid_argument("distribution parse error: expected '" + key +
                                        "', found '" + k + "'");
        }
        if (!consume('=')) throw std::invalid_argument("distribution parse error: expected '='");
        const std::string v = word();
        try {
            return std::stod(v);
        } catch (const std::exception&) {
            throw std::invalid_argument("distribution parse error: bad number '" + v + "'");
        }
    }

    Distribution entry() {
        const std::string name = word();
        if (name == "exponential") {
            return Distribution(Exponential{keyed_value("rate")});
        }
        if (name == "pareto") {
            const double scale = keyed_value("scale");
            const double shape = keyed_value("shape");
            return Distribution(Pareto{scale, shape});
        }
        if (name == "gaussian") {
            const double mean = keyed_value("mean");
            const double sd = keyed_value("sd");
            return Distribution(GaussianUV{mean, sd});
        }
        if (name == "product") {
            if (!consume('[')) {
                throw std::invalid_argument("distribution parse error: product needs '[...]'");
            }
            Product prod;
            while (true) {
                skip_ws();
                if (consume(']')) break;
                if (pos >= text.size()) {
                    throw std::invalid_argument("distribution parse error: unterminated product");
                }
                prod.components.push_back(entry());
            }
            return Distribution(std::move(prod));
        }
        throw std::invalid_argument("unknown distribution family '" + name + "'");
    }
};

void format_into(const Distribution& d, std::ostringstream& os) {
    std::visit(
        [&](const auto& fam) {
            using T = std::decay_t<decltype(fam)>;
            if constexpr (std::is_same_v<T, Exponential>) {
                os << "exponential rate=" << fam.rate;
            } else if constexpr (std::is_same_v<T, Pareto>) {
                os << "pareto scale=" << fam.scale << " shape=" << fam.shape;
            } else if constexpr (std::is_same_v<T, GaussianUV>) {
                os << "gaussian mean=" << fam.mean << " sd=" << fam.sd;
            } else {
                os << "product [ ";
                bool first = true;
                for (const auto& c : fam.components) {
                    if (!first) os << ", ";
                    first = false;
                    format_into(c, os);
                }
                os << " ]";
            }
        },
        d.value());
}

}  // namespace

Distribution parse(std::string_view text) {
    Parser p{text};
    Distribution d = p.entry();
    if (!p.at_end()) {
        throw std::invalid_argument("distribution parse error: trailing input '" +
                                    std::string(text.substr(p.pos)) + "'");
    }
    return d;
}

std::string format(const Distribution& d) {
    std::ostringstream os;
    os.precision(17);
    format_into(d, os);
    return os.str();
}

}  // namespace accel::dist
