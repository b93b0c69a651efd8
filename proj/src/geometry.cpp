#include "pairs/geometry.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include "pairs/errors.hpp"

namespace pairs {

namespace {

constexpr double kScalarSlack = 1e-9;

// Norm short-circuit threshold. Re-normalizing a float vector this close to
// unit would only shuffle the last bits, so we return it unchanged and gain
// exact idempotence.
constexpr double kAlreadyUnit = 1e-7;

double clamp_unit_interval_input(double value, const char* name) {
    if (!std::isfinite(value) || value < -1.0 - kScalarSlack || value > 1.0 + kScalarSlack) {
        throw InvalidInputError(std::string(name) + " must lie in [-1, 1]");
    }
    return std::clamp(value, -1.0, 1.0);
}

template <typename T>
double norm_of(std::span<const T> raw) {
    double sum = 0.0;
    for (const T x : raw) {
        sum += static_cast<double>(x) * static_cast<double>(x);
    }
    return std::sqrt(sum);
}

template <typename T>
std::vector<float> normalized_payload(std::span<const T> raw) {
    if (raw.empty()) {
        throw InvalidInputError("cannot normalize an empty vector");
    }
    const double norm = norm_of(raw);
    if (!std::isfinite(norm)) {
        throw InvalidInputError("cannot normalize a vector with non-finite entries");
    }
    if (norm == 0.0) {
        throw InvalidInputError("cannot normalize the zero vector: direction is undefined");
    }
    std::vector<float> out(raw.size());
    if (std::abs(norm - 1.0) <= kAlreadyUnit) {
        std::copy(raw.begin(), raw.end(), out.begin());
    } else {
        for (std::size_t i = 0; i < raw.size(); ++i) {
            out[i] = static_cast<float>(static_cast<double>(raw[i]) / norm);
        }
    }
    return out;
}

}  // namespace

EmbeddingVector EmbeddingVector::from_unit(std::vector<float> values) {
    const double norm = norm_of(std::span<const float>(values));
    if (std::abs(norm - 1.0) > kUnitNormTolerance) {
        throw InvalidInputError("vector is not unit norm within tolerance");
    }
    return EmbeddingVector(std::move(values));
}

EmbeddingVector normalize(std::span<const double> raw) {
    return EmbeddingVector(normalized_payload(raw));
}

EmbeddingVector normalize(std::span<const float> raw) {
    return EmbeddingVector(normalized_payload(raw));
}

double inner_product(std::span<const float> a, std::span<const float> b) {
    if (a.size() != b.size()) {
        throw InvalidInputError("inner product requires equal dimensions");
    }
    double sum = 0.0;
    for (std::size_t i = 0; i < a.size(); ++i) {
        sum += static_cast<double>(a[i]) * static_cast<double>(b[i]);
    }
    return std::clamp(sum, -1.0, 1.0);
}

double inner_product(const EmbeddingVector& a, const EmbeddingVector& b) {
    return inner_product(a.values(), b.values());
}

double angle(const EmbeddingVector& a, const EmbeddingVector& b) {
    return std::acos(inner_product(a, b));
}

double ais_score(double s1, double s2) {
    s1 = clamp_unit_interval_input(s1, "s1");
    s2 = clamp_unit_interval_input(s2, "s2");
    // (1-s)(1+s) instead of 1-s^2 avoids cancellation near |s| = 1.
    const double sin1 = std::sqrt((1.0 - s1) * (1.0 + s1));
    const double sin2 = std::sqrt((1.0 - s2) * (1.0 + s2));
    return s1 * s2 - sin1 * sin2;
}

double additive_score(double s1, double s2) {
    s1 = clamp_unit_interval_input(s1, "s1");
    s2 = clamp_unit_interval_input(s2, "s2");
    return s1 + s2;
}

double alpha_from_angles(double theta1, double theta2) {
    if (!std::isfinite(theta1) || !std::isfinite(theta2) || theta1 < 0.0 || theta2 < 0.0) {
        throw InvalidInputError("angles must be finite and nonnegative");
    }
    if (theta1 == 0.0 && theta2 == 0.0) {
        throw DegenerateInputError("alpha is undefined when both angles are zero");
    }
    return theta2 / (theta1 + theta2);
}

double dynamic_angle(double theta1, double theta2, double alpha) {
    if (!std::isfinite(alpha) || alpha < -kScalarSlack || alpha > 1.0 + kScalarSlack) {
        throw InvalidInputError("alpha must lie in [0, 1]");
    }
    alpha = std::clamp(alpha, 0.0, 1.0);
    auto check_angle = [](double theta, const char* name) {
        constexpr double kPi = 3.14159265358979323846;
        if (!std::isfinite(theta) || theta < -kScalarSlack || theta > kPi + kScalarSlack) {
            throw InvalidInputError(std::string(name) + " must lie in [0, pi]");
        }
        return std::clamp(theta, 0.0, kPi);
    };
    theta1 = check_angle(theta1, "theta1");
    theta2 = check_angle(theta2, "theta2");
    return alpha * theta1 + (1.0 - alpha) * theta2;
}

AlphaModel default_alpha_model() { return AlphaModel{0.058, 0.455}; }

double predict_alpha(double theta0, const AlphaModel& model) {
    return std::clamp(model.slope * theta0 + model.intercept, 0.0, 1.0);
}

AlphaModel fit_alpha_model(std::span<const AngleSample> samples) {
    if (samples.size() < 2) {
        throw DegenerateInputError("linear fit needs at least 2 samples");
    }
    double mean_t = 0.0;
    double mean_a = 0.0;
    for (const AngleSample& s : samples) {
        mean_t += s.theta0;
        mean_a += s.alpha;
    }
    mean_t /= static_cast<double>(samples.size());
    mean_a /= static_cast<double>(samples.size());

    double sxx = 0.0;
    double sxy = 0.0;
    for (const AngleSample& s : samples) {
        const double dt = s.theta0 - mean_t;
        sxx += dt * dt;
        sxy += dt * (s.alpha - mean_a);
    }
    if (sxx == 0.0) {
        throw DegenerateInputError("linear fit needs at least 2 distinct theta0 values");
    }
    const double slope = sxy / sxx;
    return AlphaModel{slope, mean_a - slope * mean_t};
}

double r_squared(std::span<const AngleSample> samples, const AlphaModel& model) {
    if (samples.empty()) {
        throw InvalidInputError("r_squared needs at least one sample");
    }
    double mean_a = 0.0;
    for (const AngleSample& s : samples) {
        mean_a += s.alpha;
    }
    mean_a /= static_cast<double>(samples.size());

    double ss_res = 0.0;
    double ss_tot = 0.0;
    for (const AngleSample& s : samples) {
        const double predicted = model.slope * s.theta0 + model.intercept;
        ss_res += (s.alpha - predicted) * (s.alpha - predicted);
        ss_tot += (s.alpha - mean_a) * (s.alpha - mean_a);
    }
    if (ss_tot == 0.0) {
        return ss_res <= std::numeric_limits<double>::epsilon() ? 1.0 : 0.0;
    }
    return 1.0 - ss_res / ss_tot;
}

}  // namespace pairs
