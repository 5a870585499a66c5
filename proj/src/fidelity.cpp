#include "dnc/fidelity.hpp"

#include <algorithm>
#include <cmath>

#include <fmt/format.h>

#include "dnc/errors.hpp"

namespace dnc {

Score::Score(double value) : value_(value) {
    if (!(value > 0.0 && value <= 1.0)) {
        throw DomainError(fmt::format("score must lie in (0, 1], got {}", value));
    }
}

Score Score::clamp(double raw, bool* clamped) {
    if (std::isnan(raw)) {
        throw DomainError("score is NaN");
    }
    const double v = std::clamp(raw, kScoreFloor, 1.0);
    if (clamped != nullptr) {
        *clamped = (v != raw);
    }
    return Score(v);
}

namespace {

void check_component(double rho, const char* name) {
    if (!(rho > 0.0 && rho <= 1.0)) {
        throw DomainError(fmt::format("{} must lie in (0, 1], got {}", name, rho));
    }
}

}  // namespace

void FidelityTriple::validate() const {
    check_component(rho_task, "rho_task");
    check_component(rho_agg, "rho_agg");
    check_component(rho_model, "rho_model");
}

double compose_fidelity(const FidelityTriple& triple) {
    triple.validate();
    return triple.rho_task * triple.rho_agg * triple.rho_model;
}

namespace {
// -log(1) is -0.0; keep it out of serialized records.
double nats(double rho) { return 0.0 - std::log(rho); }
}  // namespace

LossBreakdown to_losses(const FidelityTriple& triple) {
    triple.validate();
    LossBreakdown out;
    out.l_task = nats(triple.rho_task);
    out.l_agg = nats(triple.rho_agg);
    out.l_model = nats(triple.rho_model);
    out.l_sys = out.l_task + out.l_agg + out.l_model;
    return out;
}

FirstOrderError first_order_error(const FidelityTriple& triple) {
    triple.validate();
    const double e_task = 1.0 - triple.rho_task;
    const double e_agg = 1.0 - triple.rho_agg;
    const double e_model = 1.0 - triple.rho_model;

    FirstOrderError out;
    out.approx = e_task + e_agg + e_model;
    // 1 - (1-a)(1-b)(1-c) expanded, so the residual is formed from the interaction
    // terms directly instead of by cancellation between two nearly equal numbers.
    const double pairwise = e_task * e_agg + e_task * e_model + e_agg * e_model;
    const double triple_term = e_task * e_agg * e_model;
    out.residual = pairwise - triple_term;
    out.exact = out.approx - out.residual;
    return out;
}

Measurement measure_triple(const DecomposedScores& scores) {
    const double truth = scores.s_truth.value();
    const double ideal = scores.s_ideal_agg_ideal_art.value();
    const double real_agg = scores.s_real_agg_ideal_art.value();
    const double final_score = scores.s_real_agg_real_art.value();

    Measurement m;
    auto ratio = [&m](double num, double den) {
        const double r = num / den;
        if (r > 1.0) {
            m.monotonicity_clamped = true;
            return 1.0;
        }
        return r;
    };
    m.triple.rho_task = ratio(ideal, truth);
    m.triple.rho_agg = ratio(real_agg, ideal);
    m.triple.rho_model = ratio(final_score, real_agg);
    return m;
}

RegimeLabel classify_regime(const LossBreakdown& b, const RegimeThresholds& t) {
    if (t.trivial_threshold < 0.0 || !(t.dominance_ratio > 1.0)) {
        throw DomainError("regime thresholds need trivial_threshold >= 0 and dominance_ratio > 1");
    }
    if (b.l_sys <= t.trivial_threshold) {
        return {Regime::Trivial, false};
    }
    if (b.l_task >= t.dominance_ratio * b.l_model) {
        return {Regime::TaskDominated, false};
    }
    if (b.l_model >= t.dominance_ratio * b.l_task) {
        return {Regime::ModelDominated, false};
    }
    return {Regime::ModelDominated, true};
}

std::string_view to_string(Regime regime) {
    switch (regime) {
        case Regime::Trivial: return "Trivial";
        case Regime::TaskDominated: return "TaskDominated";
        case Regime::ModelDominated: return "ModelDominated";
    }
    return "?";
}

Regime regime_from_string(std::string_view name) {
    if (name == "Trivial") return Regime::Trivial;
    if (name == "TaskDominated") return Regime::TaskDominated;
    if (name == "ModelDominated") return Regime::ModelDominated;
    throw FormatError(fmt::format("unknown regime '{}'", name));
}

}  // namespace dnc
