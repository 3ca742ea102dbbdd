#include "cavnet/valuation.hpp"

#include <cmath>
#include <limits>
#include <sstream>

#include "cavnet/errors.hpp"

namespace cavnet {

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

void require_nonnegative_time(double theta) {
    if (!(theta >= 0.0)) {
        std::ostringstream os;
        os << "travel time must be >= 0, got " << theta;
        throw DomainError(os.str());
    }
}

}  // namespace

std::string to_string(Orientation o) {
    return o == Orientation::PaperLiteral ? "paper_literal" : "resource_mode";
}

std::string to_string(ValuationFamily f) {
    switch (f) {
        case ValuationFamily::NegQuadratic: return "neg_quadratic";
        case ValuationFamily::NegExponential: return "neg_exponential";
        case ValuationFamily::LogResource: return "log_resource";
    }
    return "unknown";
}

Orientation orientation_of(ValuationFamily f) {
    return f == ValuationFamily::LogResource ? Orientation::ResourceMode
                                             : Orientation::PaperLiteral;
}

void ValuationSpec::validate() const {
    if (!(a > 0.0) || !std::isfinite(a)) {
        throw AttributeError("valuation parameter a must be positive and finite");
    }
    if (family == ValuationFamily::NegQuadratic && (!(b >= 0.0) || !std::isfinite(b))) {
        throw AttributeError("neg_quadratic parameter b must be >= 0");
    }
    if (family == ValuationFamily::NegExponential && (!(c > 0.0) || !std::isfinite(c))) {
        throw AttributeError("neg_exponential parameter c must be positive");
    }
}

double eval_valuation(const ValuationSpec& spec, double theta) {
    require_nonnegative_time(theta);
    switch (spec.family) {
        case ValuationFamily::NegQuadratic:
            return -spec.a * theta * theta - spec.b * theta;
        case ValuationFamily::NegExponential:
            return spec.a * (1.0 - std::exp(spec.c * theta));
        case ValuationFamily::LogResource:
            return spec.a * std::log1p(theta);
    }
    throw DomainError("unknown valuation family");
}

double valuation_derivative(const ValuationSpec& spec, double theta) {
    require_nonnegative_time(theta);
    switch (spec.family) {
        case ValuationFamily::NegQuadratic:
            return -2.0 * spec.a * theta - spec.b;
        case ValuationFamily::NegExponential:
            return -spec.a * spec.c * std::exp(spec.c * theta);
        case ValuationFamily::LogResource:
            return spec.a / (1.0 + theta);
    }
    throw DomainError("unknown valuation family");
}

double inverse_marginal(const ValuationSpec& spec, double y) {
    switch (spec.family) {
        case ValuationFamily::NegQuadratic:
            // v'(t) = -2at - b is onto (-inf, -b]; y > -b has no preimage
            // with t >= 0, which we signal as -inf (below any lower bound).
            return -(y + spec.b) / (2.0 * spec.a);
        case ValuationFamily::NegExponential: {
            // v'(t) = -ac*exp(ct), range (-inf, -ac].
            const double floor = -spec.a * spec.c;
            if (y >= floor) return -kInf;
            return std::log(y / floor) / spec.c;
        }
        case ValuationFamily::LogResource:
            // v'(t) = a/(1+t), range (0, a].
            if (y <= 0.0) return kInf;
            return spec.a / y - 1.0;
    }
    throw DomainError("unknown valuation family");
}

namespace {

Assumption1Report check_impl(const std::function<double(double)>& v,
                             const std::function<double(double)>& dv,
                             Orientation orientation,
                             std::span<const double> grid) {
    if (grid.size() < 3 || grid.front() != 0.0) {
        throw DomainError("assumption check needs >= 3 strictly increasing grid points starting at 0");
    }
    for (std::size_t k = 1; k < grid.size(); ++k) {
        if (!(grid[k] > grid[k - 1])) {
            throw DomainError("assumption check grid must be strictly increasing");
        }
    }

    Assumption1Report report;
    report.zero_at_origin = (v(0.0) == 0.0);
    if (!report.zero_at_origin) {
        report.violations.push_back("v(0) != 0");
    }

    const bool decreasing = (orientation == Orientation::PaperLiteral);
    report.monotone = true;
    report.strictly_concave = true;
    for (std::size_t k = 0; k + 1 < grid.size(); ++k) {
        const double x = grid[k];
        const double y = grid[k + 1];
        const double vx = v(x);
        const double vy = v(y);
        if (decreasing ? !(vx > vy) : !(vx < vy)) {
            if (report.monotone) {
                report.violations.push_back(decreasing ? "not strictly decreasing"
                                                       : "not strictly increasing");
            }
            report.monotone = false;
        }
        const double mid = v(0.5 * (x + y));
        if (!(mid > 0.5 * (vx + vy))) {
            if (report.strictly_concave) {
                report.violations.push_back("not strictly concave");
            }
            report.strictly_concave = false;
        }
    }

    // Second-order finite differences; one-sided at the domain boundary.
    report.derivative_matches = true;
    for (double x : grid) {
        const double h = 6e-6 * (1.0 + std::abs(x));
        double fd;
        if (x - h < 0.0) {
            fd = (-3.0 * v(x) + 4.0 * v(x + h) - v(x + 2.0 * h)) / (2.0 * h);
        } else {
            fd = (v(x + h) - v(x - h)) / (2.0 * h);
        }
        const double exact = dv(x);
        if (std::abs(fd - exact) > 1e-6 * std::max(1.0, std::abs(exact))) {
            if (report.derivative_matches) {
                std::ostringstream os;
                os << "derivative mismatch at theta=" << x << " (closed form " << exact
                   << ", finite difference " << fd << ")";
                report.violations.push_back(os.str());
            }
            report.derivative_matches = false;
        }
    }
    return report;
}

}  // namespace

Assumption1Report check_assumption1(const ValuationSpec& spec, std::span<const double> grid) {
    spec.validate();
    return check_impl([&spec](double t) { return eval_valuation(spec, t); },
                      [&spec](double t) { return valuation_derivative(spec, t); },
                      spec.orientation(), grid);
}

Assumption1Report check_assumption1(const std::function<double(double)>& v,
                                    const std::function<double(double)>& dv,
                                    Orientation orientation,
                                    std::span<const double> grid) {
    return check_impl(v, dv, orientation, grid);
}

}  // namespace cavnet
