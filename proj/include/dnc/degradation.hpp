#pragma once

#include <cmath>
#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <variant>

namespace dnc {

/// Losses above this many nats are clamped; exp(-700) is the fidelity floor.
inline constexpr double kLossCap = 700.0;

/// g(L) = a * L^beta
struct PowerLaw {
    double a = 0.0;
    double beta = 1.0;
    friend bool operator==(const PowerLaw&, const PowerLaw&) = default;
};

/// g(L) = slope * L + intercept
struct Linear {
    double slope = 0.0;
    double intercept = 0.0;
    friend bool operator==(const Linear&, const Linear&) = default;
};

/// g(L) = scale * L / (L + midpoint); bounded by `scale`.
struct Saturating {
    double scale = 0.0;
    double midpoint = 1.0;
    friend bool operator==(const Saturating&, const Saturating&) = default;
};

/// Length-induced loss-in-nats curve g(L). Every family is nonnegative and
/// nondecreasing on L >= 0.
using DegradationModel = std::variant<PowerLaw, Linear, Saturating>;

/// Throws DomainError for parameters outside the family's admissible range.
void validate(const DegradationModel& model);

/// g(length), capped at kLossCap.
double loss_at(const DegradationModel& model, double length);

/// g(length) without the cap. The crossover solver compares growth rates and
/// needs the uncapped curve.
double raw_loss(const DegradationModel& model, double length);

/// exp(-g(L)), the fidelity a single call at this length retains.
inline double fidelity_at(const DegradationModel& model, double length);

/// True for the zero model (every loss is 0 regardless of length).
bool is_zero(const DegradationModel& model);

/// "powerlaw:1e-6,2", "linear:1e-3,0", "saturating:2,5000", "zero".
DegradationModel parse_model(std::string_view text);
std::string format_model(const DegradationModel& model);

/// Chunked divide-and-conquer loss:
///   ceil(T / c) * per_chunk_unit_loss + overhead_slope * T + overhead_intercept
struct DcLossModel {
    double per_chunk_unit_loss = 0.0;
    double overhead_slope = 0.0;
    double overhead_intercept = 0.0;
};

double dc_loss(const DcLossModel& model, std::uint64_t total_length, std::uint64_t chunk_size);

enum class CrossoverStatus {
    Found,
    /// strong <= dc at search_max, so no tail of [1, search_max] favours D&C.
    NotFound,
    /// The strong curve is not convex and the D&C side grows, so the sign of
    /// the difference may change more than once; no threshold is reported.
    NonMonotone,
};

struct CrossoverResult {
    CrossoverStatus status = CrossoverStatus::NotFound;
    std::optional<std::uint64_t> t0;
    /// False when the per-chunk step term makes the difference drop at chunk
    /// boundaries; the threshold is then located window by window.
    bool difference_monotone = true;
};

inline constexpr std::uint64_t kDefaultSearchMax = std::uint64_t{1} << 24;

/// Smallest T0 <= search_max such that strong(T) > dc(T) for every integer T
/// in [T0, search_max].
CrossoverResult crossover(const DegradationModel& strong, const DcLossModel& dc,
                          std::uint64_t chunk_size,
                          std::uint64_t search_max = kDefaultSearchMax);

std::string_view to_string(CrossoverStatus status);

struct FitPoint {
    double length = 0.0;
    double value = 0.0;  // error in [0, 1) or loss in nats, depending on the entry point
};

struct FitResult {
    DegradationModel model = Linear{};
    double residual_sum_squares = 0.0;  // log space
    std::size_t points_used = 0;
    /// No point carried positive loss; model is Linear(0, 0).
    bool degenerate = false;
};

/// Fits ln(loss) = ln(a) + beta * ln(L) by ordinary least squares, where
/// loss = -ln(1 - error) with error clamped to [0, 1 - kScoreFloor].
FitResult fit_power_law(std::span<const FitPoint> error_points);

/// Same fit on points that already carry losses in nats.
FitResult fit_power_law_losses(std::span<const FitPoint> loss_points);

/// Loss implied by an accuracy-style error.
double error_to_loss(double error);

inline double fidelity_at(const DegradationModel& model, double length) {
    return std::exp(-loss_at(model, length));
}

}  // namespace dnc
