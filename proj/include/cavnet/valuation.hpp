#pragma once

#include <functional>
#include <optional>
#include <span>
#include <string>
#include <vector>

namespace cavnet {

// Direction in which a commute-satisfaction function moves with travel time.
// paper_literal families are strictly decreasing (time is a bad);
// resource_mode families are strictly increasing (time is a resource share),
// which is what produces interior optima with a binding capacity price.
enum class Orientation { PaperLiteral, ResourceMode };

enum class ValuationFamily {
    NegQuadratic,    // v(t) = -a*t^2 - b*t          a > 0, b >= 0
    NegExponential,  // v(t) = a*(1 - exp(c*t))      a > 0, c > 0
    LogResource,     // v(t) = a*log(1 + t)          a > 0
};

std::string to_string(Orientation o);
std::string to_string(ValuationFamily f);
Orientation orientation_of(ValuationFamily f);

// Parametric commute-satisfaction function. All families are continuously
// differentiable, strictly concave, and have v(0) = 0 exactly.
struct ValuationSpec {
    ValuationFamily family = ValuationFamily::NegQuadratic;
    double a = 1.0;
    double b = 0.0;  // NegQuadratic only
    double c = 1.0;  // NegExponential only

    Orientation orientation() const { return orientation_of(family); }

    bool operator==(const ValuationSpec&) const = default;

    // Throws AttributeError unless the parameters satisfy the family's
    // sign constraints.
    void validate() const;
};

// v(theta). Throws DomainError for theta < 0.
double eval_valuation(const ValuationSpec& spec, double theta);

// v'(theta), closed form. Throws DomainError for theta < 0.
double valuation_derivative(const ValuationSpec& spec, double theta);

// Inverse of the marginal value: the theta >= 0 with v'(theta) == y, or
// +/-inf when y is outside the range of v' (callers clamp to their box).
double inverse_marginal(const ValuationSpec& spec, double y);

struct Assumption1Report {
    bool zero_at_origin = false;   // v(0) == 0 exactly
    bool monotone = false;         // strict, in the declared orientation
    bool strictly_concave = false; // sampled midpoint test
    bool derivative_matches = false;  // closed form vs central differences
    std::vector<std::string> violations;

    bool pass() const {
        return zero_at_origin && monotone && strictly_concave && derivative_matches;
    }
};

// Sampled check of the regularity assumptions on a grid of >= 3 strictly
// increasing points starting at 0. The generic overload exists so tests can
// probe functions that are not representable as a ValuationSpec.
Assumption1Report check_assumption1(const ValuationSpec& spec, std::span<const double> grid);
Assumption1Report check_assumption1(const std::function<double(double)>& v,
                                    const std::function<double(double)>& dv,
                                    Orientation orientation,
                                    std::span<const double> grid);

}  // namespace cavnet
