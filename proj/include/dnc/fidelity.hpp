#pragma once

#include <string>
#include <string_view>

namespace dnc {

/// Floor applied to every metric value before it enters a ratio or a log.
inline constexpr double kScoreFloor = 1e-6;

/// A normalized metric value in (0, 1].
class Score {
public:
    /// Throws DomainError unless 0 < value <= 1.
    explicit Score(double value);

    /// Clamps a raw metric value in [0, 1] (or slightly outside) into
    /// [kScoreFloor, 1]. `clamped` is set when the floor or ceiling was applied.
    static Score clamp(double raw, bool* clamped = nullptr);

    double value() const noexcept { return value_; }

    friend bool operator==(const Score&, const Score&) = default;

private:
    double value_;
};

/// Per-stage fidelity ratios; each in (0, 1].
struct FidelityTriple {
    double rho_task = 1.0;
    double rho_agg = 1.0;
    double rho_model = 1.0;

    /// Throws DomainError when a component is outside (0, 1].
    void validate() const;
};

/// Additive log-losses in nats; l_sys = l_task + l_agg + l_model.
struct LossBreakdown {
    double l_task = 0.0;
    double l_agg = 0.0;
    double l_model = 0.0;
    double l_sys = 0.0;
};

/// The four oracle-ladder evaluations of one decomposed run.
struct DecomposedScores {
    Score s_truth{1.0};                 // S(y*)
    Score s_ideal_agg_ideal_art{1.0};   // S(h*(a*))
    Score s_real_agg_ideal_art{1.0};    // S(h(a*))
    Score s_real_agg_real_art{1.0};     // S(h(â))
};

struct Measurement {
    FidelityTriple triple;
    /// Some consecutive ratio exceeded 1 and was clamped.
    bool monotonicity_clamped = false;
};

struct FirstOrderError {
    double exact = 0.0;     // 1 - rho_sys
    double approx = 0.0;    // eps_task + eps_agg + eps_model
    double residual = 0.0;  // approx - exact, always >= 0
};

enum class Regime { Trivial, TaskDominated, ModelDominated };

struct RegimeThresholds {
    double trivial_threshold = 0.02;  // nats
    double dominance_ratio = 3.0;
};

struct RegimeLabel {
    Regime regime = Regime::Trivial;
    /// Neither term dominates by the configured ratio; ModelDominated is a fallback.
    bool indeterminate = false;
};

double compose_fidelity(const FidelityTriple& triple);
LossBreakdown to_losses(const FidelityTriple& triple);
FirstOrderError first_order_error(const FidelityTriple& triple);
Measurement measure_triple(const DecomposedScores& scores);
RegimeLabel classify_regime(const LossBreakdown& breakdown,
                            const RegimeThresholds& thresholds = {});

std::string_view to_string(Regime regime);
Regime regime_from_string(std::string_view name);

}  // namespace dnc
