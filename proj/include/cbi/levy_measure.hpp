#pragma once

#include <cstdint>
#include <random>
#include <string>
#include <variant>
#include <vector>

#include "json.hpp"

#include "cbi/numeric.hpp"

namespace cbi {

/// Which Levy-Khinchine integrand family a measure feeds:
/// immigration (nu, compensation e^{uz}-1) or branching (mu, e^{uz}-1-uz).
enum class MeasureRole { Immigration, Branching };

/// c * delta_a, an atom of mass c at location a > 0.
struct PointMass {
    double mass;
    double location;
};

/// Density A e^{-theta z} z^{-eta} on (cutoff, inf).
struct TemperedPowerLaw {
    double amplitude;
    double tempering;   // theta >= 0; equals the exponential-moment threshold
    double exponent;    // eta
    double cutoff;      // x0 >= 0
};

/// Density e^{-z^rho} on (0, inf), rho > 1. All exponential moments finite.
struct StretchedExp {
    double exponent;    // rho
};

/// Parametric jump measure on (0, inf): a finite sum of the variants above
/// (empty sum = the zero measure). Keeping measures parametric is what makes
/// the exponential-moment threshold and the boundary convergence tests exact.
/// Immutable after construction; safe for concurrent reads.
class LevyMeasure {
public:
    using Part = std::variant<PointMass, TemperedPowerLaw, StretchedExp>;

    LevyMeasure() = default;  // zero measure

    static LevyMeasure zero();
    static LevyMeasure point_mass(double mass, double location);
    static LevyMeasure tempered_power_law(double amplitude, double tempering,
                                          double exponent, double cutoff = 0.0);
    static LevyMeasure stretched_exp(double exponent);
    static LevyMeasure mixture(std::vector<LevyMeasure> parts);

    bool is_zero() const { return parts_.empty(); }
    const std::vector<Part>& parts() const { return parts_; }

    /// Throws if the measure fails the integrability condition of the role
    /// (int (1^z) dnu < inf, resp. int (z^z^2) dmu < inf).
    void validate_role(MeasureRole role) const;

    /// gamma = sup{g >= 0 : int_1^inf e^{gz} dm < inf}; +inf for Zero,
    /// PointMass and StretchedExp, the tempering theta for TemperedPowerLaw,
    /// the minimum over parts for a mixture.
    double exp_threshold() const;

    /// int z^k e^{uz} dm over the support, as an extended real. With
    /// compensated=true the integrand becomes, per role,
    ///   k=0: e^{uz}-1 (Immigration) or e^{uz}-1-uz (Branching),
    ///   k=1: z(e^{uz}-1) (either role; needed for R').
    /// Closed forms for PointMass and TemperedPowerLaw (incomplete-gamma
    /// identities, including the exact finite-vs-infinite decision at the
    /// boundary u = gamma); adaptive quadrature otherwise.
    /// Throws InvalidOrder for k outside {0,...,4} (or compensated k > 1).
    double exp_poly_integral(double u, int k, bool compensated, MeasureRole role) const;

    /// Plain k-th moment int z^k dm (extended real).
    double moment(int k) const { return exp_poly_integral(0.0, k, false, MeasureRole::Immigration); }

    double total_mass() const;                       // m((0,inf)), possibly inf
    double tail_mass(double cutoff) const;           // m((cutoff,inf) ∩ support)
    double tail_moment(double cutoff, int k) const;  // int_(cutoff,inf) z^k dm
    double small_moment(double cutoff, int k) const; // int_(0,cutoff] z^k dm
    double min_support() const;                      // inf of the support (+inf for Zero)

    /// One draw from the normalized restriction to (cutoff, inf).
    /// Requires tail_mass(cutoff) > 0 and finite.
    double sample_tail(double cutoff, std::mt19937_64& rng) const;

    /// The measure e^{shift z} dm, when the family is closed under tilting.
    /// Throws TiltUnavailable for StretchedExp parts.
    LevyMeasure exp_tilt(double shift) const;

    nlohmann::json to_json() const;
    static LevyMeasure from_json(const nlohmann::json& j);
    std::string describe() const;

private:
    std::vector<Part> parts_;
};

}  // namespace cbi
