#pragma once

#include <cstddef>
#include <span>
#include <vector>

namespace pairs {

/// Stored embeddings must stay within this distance of unit Euclidean norm.
inline constexpr double kUnitNormTolerance = 1e-6;

/// Dense unit-norm vector. All similarity math in this library assumes its
/// operands are normalized, so the only ways to obtain one are normalize()
/// and the trusted from_unit() used by storage paths.
class EmbeddingVector {
public:
    std::span<const float> values() const noexcept { return values_; }
    std::size_t dimension() const noexcept { return values_.size(); }

    /// Wraps an already-normalized payload (e.g. rows read back from disk).
    /// Throws InvalidInputError if the norm is off by more than
    /// kUnitNormTolerance.
    static EmbeddingVector from_unit(std::vector<float> values);

    bool operator==(const EmbeddingVector&) const = default;

private:
    explicit EmbeddingVector(std::vector<float> values) : values_(std::move(values)) {}
    friend EmbeddingVector normalize(std::span<const double> raw);
    friend EmbeddingVector normalize(std::span<const float> raw);

    std::vector<float> values_;
};

/// Scales a raw vector to unit norm (direction preserved). Inputs that are
/// already unit within 1e-7 are returned unchanged, which makes the
/// operation exactly idempotent. Throws InvalidInputError on a zero or
/// non-finite vector.
EmbeddingVector normalize(std::span<const double> raw);
EmbeddingVector normalize(std::span<const float> raw);

/// Plain left-to-right dot product accumulated in double and clamped to
/// [-1, 1]. Both spans must have equal length.
double inner_product(std::span<const float> a, std::span<const float> b);
double inner_product(const EmbeddingVector& a, const EmbeddingVector& b);

/// arccos of the clamped inner product, in [0, pi].
double angle(const EmbeddingVector& a, const EmbeddingVector& b);

/// Joint relevance of a document against two probes given its similarities
/// to each: s1*s2 - sqrt(1-s1^2)*sqrt(1-s2^2), which equals
/// cos(arccos(s1) + arccos(s2)). Rewards documents aligned with both probes
/// and penalizes divergence from either. Inputs outside [-1, 1] by more
/// than 1e-9 are rejected; drift inside that tolerance is clamped.
double ais_score(double s1, double s2);

/// Baseline scorer: plain sum s1 + s2. Same input validation as ais_score.
double additive_score(double s1, double s2);

/// Relative informativeness of the query: theta2 / (theta1 + theta2).
/// Angles must be nonnegative and not both zero.
double alpha_from_angles(double theta1, double theta2);

/// Weighted retrieval direction: alpha*theta1 + (1-alpha)*theta2.
/// Smaller is better; alpha = 1 trusts the query alone.
double dynamic_angle(double theta1, double theta2, double alpha);

/// Linear map from theta0 (query/pseudo-context angle) to the weighting
/// factor alpha.
struct AlphaModel {
    double slope = 0.0;
    double intercept = 0.0;

    bool operator==(const AlphaModel&) const = default;
};

/// Default coefficients shipped with the library: alpha = 0.058*theta0 + 0.455.
AlphaModel default_alpha_model();

/// slope*theta0 + intercept, clamped to [0, 1].
double predict_alpha(double theta0, const AlphaModel& model);

/// One (query, pseudo-context, document) measurement: the three pairwise
/// angles and the derived weighting factor alpha = theta2/(theta1+theta2).
struct AngleSample {
    double theta0 = 0.0;
    double theta1 = 0.0;
    double theta2 = 0.0;
    double alpha = 0.0;
};

/// Ordinary least squares fit of alpha on theta0. Needs at least two
/// samples with distinct theta0; throws DegenerateInputError otherwise.
AlphaModel fit_alpha_model(std::span<const AngleSample> samples);

/// Coefficient of determination of `model` on `samples`. When the alphas
/// have no variance the result is 1 for a perfect fit and 0 otherwise.
double r_squared(std::span<const AngleSample> samples, const AlphaModel& model);

}  // namespace pairs
