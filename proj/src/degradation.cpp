#include "dnc/degradation.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <vector>

#include <fmt/format.h>

#include "dnc/errors.hpp"
#include "dnc/fidelity.hpp"

namespace dnc {

namespace {

template <class... Ts>
struct overloaded : Ts... {
    using Ts::operator()...;
};
template <class... Ts>
overloaded(Ts...) -> overloaded<Ts...>;

bool finite_nonneg(double v) { return std::isfinite(v) && v >= 0.0; }

}  // namespace

void validate(const DegradationModel& model) {
    std::visit(overloaded{
                   [](const PowerLaw& m) {
                       if (!finite_nonneg(m.a) || !(std::isfinite(m.beta) && m.beta > 0.0)) {
                           throw DomainError(fmt::format(
                               "power law needs a >= 0 and beta > 0, got a={} beta={}", m.a, m.beta));
                       }
                   },
                   [](const Linear& m) {
                       if (!finite_nonneg(m.slope) || !finite_nonneg(m.intercept)) {
                           throw DomainError(fmt::format(
                               "linear model needs slope, intercept >= 0, got {} {}", m.slope,
                               m.intercept));
                       }
                   },
                   [](const Saturating& m) {
                       if (!finite_nonneg(m.scale) ||
                           !(std::isfinite(m.midpoint) && m.midpoint > 0.0)) {
                           throw DomainError(fmt::format(
                               "saturating model needs scale >= 0 and midpoint > 0, got {} {}",
                               m.scale, m.midpoint));
                       }
                   },
               },
               model);
}

double raw_loss(const DegradationModel& model, double length) {
    if (!(length >= 0.0)) {
        throw DomainError(fmt::format("length must be >= 0, got {}", length));
    }
    return std::visit(overloaded{
                          [&](const PowerLaw& m) {
                              return length == 0.0 ? 0.0 : m.a * std::pow(length, m.beta);
                          },
                          [&](const Linear& m) { return m.slope * length + m.intercept; },
                          [&](const Saturating& m) { return m.scale * length / (length + m.midpoint); },
                      },
                      model);
}

double loss_at(const DegradationModel& model, double length) {
    const double g = raw_loss(model, length);
    return std::isnan(g) ? kLossCap : std::min(g, kLossCap);
}

bool is_zero(const DegradationModel& model) {
    return std::visit(overloaded{
                          [](const PowerLaw& m) { return m.a == 0.0; },
                          [](const Linear& m) { return m.slope == 0.0 && m.intercept == 0.0; },
                          [](const Saturating& m) { return m.scale == 0.0; },
                      },
                      model);
}

namespace {

std::vector<double> parse_params(std::string_view text) {
    std::vector<double> out;
    while (!text.empty()) {
        const auto comma = text.find(',');
        std::string_view field = text.substr(0, comma);
        // Accept "a=1e-6" as well as bare "1e-6".
        if (const auto eq = field.find('='); eq != std::string_view::npos) {
            field.remove_prefix(eq + 1);
        }
        while (!field.empty() && field.front() == ' ') field.remove_prefix(1);
        while (!field.empty() && field.back() == ' ') field.remove_suffix(1);
        double v = 0.0;
        const auto [ptr, ec] = std::from_chars(field.data(), field.data() + field.size(), v);
        if (ec != std::errc{} || ptr != field.data() + field.size()) {
            throw FormatError(fmt::format("bad model parameter '{}'", field));
        }
        out.push_back(v);
        if (comma == std::string_view::npos) break;
        text.remove_prefix(comma + 1);
    }
    return out;
}

}  // namespace

DegradationModel parse_model(std::string_view text) {
    const auto colon = text.find(':');
    const std::string_view family = text.substr(0, colon);
    const std::vector<double> p =
        colon == std::string_view::npos ? std::vector<double>{} : parse_params(text.substr(colon + 1));

    auto need = [&](std::size_t n) {
        if (p.size() != n) {
            throw FormatError(fmt::format("model '{}' expects {} parameters, got {}", family, n,
                                          p.size()));
        }
    };
    DegradationModel model;
    if (family == "zero") {
        need(0);
        model = Linear{0.0, 0.0};
    } else if (family == "powerlaw") {
        need(2);
        model = PowerLaw{p[0], p[1]};
    } else if (family == "linear") {
        need(2);
        model = Linear{p[0], p[1]};
    } else if (family == "saturating") {
        need(2);
        model = Saturating{p[0], p[1]};
    } else {
        throw FormatError(fmt::format(
            "unknown degradation family '{}' (expected powerlaw, linear, saturating or zero)", family));
    }
    validate(model);
    return model;
}

std::string format_model(const DegradationModel& model) {
    return std::visit(overloaded{
                          [](const PowerLaw& m) { return fmt::format("powerlaw:{},{}", m.a, m.beta); },
                          [](const Linear& m) {
                              return fmt::format("linear:{},{}", m.slope, m.intercept);
                          },
                          [](const Saturating& m) {
                              return fmt::format("saturating:{},{}", m.scale, m.midpoint);
                          },
                      },
                      model);
}

double dc_loss(const DcLossModel& model, std::uint64_t total_length, std::uint64_t chunk_size) {
    if (chunk_size == 0) {
        throw DomainError("chunk size must be >= 1");
    }
    if (model.per_chunk_unit_loss < 0.0 || model.overhead_slope < 0.0 ||
        model.overhead_intercept < 0.0) {
        throw DomainError("D&C loss model parameters must be nonnegative");
    }
    const std::uint64_t chunks = total_length / chunk_size + (total_length % chunk_size != 0);
    return static_cast<double>(chunks) * model.per_chunk_unit_loss +
           model.overhead_slope * static_cast<double>(total_length) + model.overhead_intercept;
}

std::string_view to_string(CrossoverStatus status) {
    switch (status) {
        case CrossoverStatus::Found: return "found";
        case CrossoverStatus::NotFound: return "not_found";
        case CrossoverStatus::NonMonotone: return "non_monotone";
    }
    return "?";
}

namespace {

/// Smallest x in [lo, hi] with pred(x), assuming pred is monotone false->true
/// and pred(hi) holds.
template <class Pred>
std::uint64_t first_true(std::uint64_t lo, std::uint64_t hi, Pred pred) {
    while (lo < hi) {
        const std::uint64_t mid = lo + (hi - lo) / 2;
        if (pred(mid)) {
            hi = mid;
        } else {
            lo = mid + 1;
        }
    }
    return hi;
}

bool strong_is_convex(const DegradationModel& m) {
    if (const auto* p = std::get_if<PowerLaw>(&m)) return p->beta >= 1.0 || p->a == 0.0;
    return std::holds_alternative<Linear>(m);
}

class Difference {
public:
    Difference(const DegradationModel& strong, const DcLossModel& dc, std::uint64_t chunk)
        : strong_(strong), dc_(dc), chunk_(chunk) {}

    double operator()(std::uint64_t t) const {
        return raw_loss(strong_, static_cast<double>(t)) - dc_loss(dc_, t, chunk_);
    }

    // Continuous bounds from T/c <= ceil(T/c) < T/c + 1:
    // lower(T) < diff(T) <= upper(T).
    double upper(std::uint64_t t) const {
        const double td = static_cast<double>(t);
        return raw_loss(strong_, td) - dc_.overhead_slope * td - dc_.overhead_intercept -
               dc_.per_chunk_unit_loss * td / static_cast<double>(chunk_);
    }
    double lower(std::uint64_t t) const { return upper(t) - dc_.per_chunk_unit_loss; }

private:
    const DegradationModel& strong_;
    const DcLossModel& dc_;
    std::uint64_t chunk_;
};

/// Last t in [lo, hi] with diff(t) <= 0 for a diff that is convex on [lo, hi];
/// nullopt if diff > 0 on the whole range.
template <class F>
std::optional<std::uint64_t> last_nonpositive_convex(const F& diff, std::uint64_t lo, std::uint64_t hi) {
    if (diff(hi) <= 0.0) return hi;
    // Minimizer: first t whose forward difference is nonnegative.
    const std::uint64_t argmin =
        lo == hi ? lo : first_true(lo, hi, [&](std::uint64_t t) { return t == hi || diff(t + 1) >= diff(t); });
    if (diff(argmin) > 0.0) return std::nullopt;
    // diff is nondecreasing on [argmin, hi]; find the first positive point.
    const std::uint64_t first_pos = first_true(argmin, hi, [&](std::uint64_t t) { return diff(t) > 0.0; });
    return first_pos - 1;
}

}  // namespace

CrossoverResult crossover(const DegradationModel& strong, const DcLossModel& dc,
                          std::uint64_t chunk_size, std::uint64_t search_max) {
    validate(strong);
    if (search_max < 1) {
        throw DomainError("search_max must be >= 1");
    }
    if (chunk_size == 0) {
        throw DomainError("chunk size must be >= 1");
    }
    const Difference diff(strong, dc, chunk_size);
    CrossoverResult result;

    if (!(diff(search_max) > 0.0)) {
        result.status = CrossoverStatus::NotFound;
        return result;
    }

    const bool convex = strong_is_convex(strong);
    // With chunk_size 1 the step term is linear; with chunk_size >= search_max it is constant.
    const bool stepped = dc.per_chunk_unit_loss > 0.0 && chunk_size > 1 && chunk_size < search_max;
    const bool flat_dc = dc.overhead_slope == 0.0 && (dc.per_chunk_unit_loss == 0.0 || chunk_size >= search_max);

    auto found = [&](std::uint64_t t0) {
        result.status = CrossoverStatus::Found;
        result.t0 = t0;
        return result;
    };

    if (!stepped) {
        if (flat_dc) {
            // Strong curve nondecreasing against a constant: plain bisection.
            return found(first_true(1, search_max, [&](std::uint64_t t) { return diff(t) > 0.0; }));
        }
        if (!convex) {
            result.status = CrossoverStatus::NonMonotone;
            result.difference_monotone = false;
            return result;
        }
        const auto last = last_nonpositive_convex(diff, 1, search_max);
        return found(last ? *last + 1 : 1);
    }

    // Stepped D&C loss: the difference drops by the unit loss at every chunk
    // boundary, so it is never monotone. Bracket the threshold with the two
    // continuous envelopes, then search chunk windows from the top down.
    result.difference_monotone = false;
    if (!convex) {
        result.status = CrossoverStatus::NonMonotone;
        return result;
    }

    // Envelope predicates are monotone: both envelopes are convex and <= 0 at T = 0.
    const std::uint64_t upper_first =
        diff.upper(search_max) > 0.0
            ? first_true(1, search_max, [&](std::uint64_t t) { return diff.upper(t) > 0.0; })
            : search_max;
    const std::uint64_t lower_first =
        diff.lower(search_max) > 0.0
            ? first_true(1, search_max, [&](std::uint64_t t) { return diff.lower(t) > 0.0; })
            : search_max;

    // Pad by two windows on each side to absorb rounding in the envelopes.
    const std::uint64_t pad = 2 * chunk_size + 2;
    const std::uint64_t top = std::min(search_max, lower_first + pad);
    const std::uint64_t bottom = upper_first > pad ? upper_first - pad : 1;

    std::uint64_t hi = top;
    while (true) {
        // Window k covers ((k-1)c, kc]; within it the step term is constant.
        const std::uint64_t window_start = ((hi - 1) / chunk_size) * chunk_size + 1;
        const std::uint64_t lo = std::max(window_start, bottom);
        if (const auto last = last_nonpositive_convex(diff, lo, hi)) {
            return found(*last + 1);
        }
        if (lo == bottom) {
            break;
        }
        hi = lo - 1;
    }
    // Positive over the whole bracket; below it the upper envelope is <= 0.
    return found(bottom);
}

double error_to_loss(double error) {
    if (std::isnan(error)) {
        throw DomainError("error is NaN");
    }
    const double e = std::clamp(error, 0.0, 1.0 - kScoreFloor);
    return -std::log1p(-e);
}

namespace {

FitResult fit_losses(const std::vector<FitPoint>& points) {
    if (points.size() < 2) {
        throw InsufficientPoints(fmt::format("need at least 2 points, got {}", points.size()));
    }
    {
        auto lengths = points;
        std::sort(lengths.begin(), lengths.end(),
                  [](const FitPoint& l, const FitPoint& r) { return l.length < r.length; });
        if (lengths.front().length == lengths.back().length) {
            throw InsufficientPoints("need at least 2 distinct lengths");
        }
    }
    for (const auto& p : points) {
        if (!(p.length > 0.0) || !std::isfinite(p.length)) {
            throw DomainError(fmt::format("fit lengths must be positive, got {}", p.length));
        }
    }

    std::vector<FitPoint> usable;
    for (const auto& p : points) {
        if (p.value > 0.0) usable.push_back({std::log(p.length), std::log(p.value)});
    }
    FitResult out;
    if (usable.empty()) {
        out.model = Linear{0.0, 0.0};
        out.degenerate = true;
        return out;
    }
    const double n = static_cast<double>(usable.size());
    double mx = 0.0, my = 0.0;
    for (const auto& p : usable) {
        mx += p.length;
        my += p.value;
    }
    mx /= n;
    my /= n;
    double sxx = 0.0, sxy = 0.0;
    for (const auto& p : usable) {
        sxx += (p.length - mx) * (p.length - mx);
        sxy += (p.length - mx) * (p.value - my);
    }
    if (usable.size() < 2 || sxx == 0.0) {
        throw InsufficientPoints("need positive loss at 2 or more distinct lengths");
    }
    const double beta = sxy / sxx;
    const double log_a = my - beta * mx;
    double rss = 0.0;
    for (const auto& p : usable) {
        const double r = p.value - (log_a + beta * p.length);
        rss += r * r;
    }
    out.model = PowerLaw{std::exp(log_a), beta};
    out.residual_sum_squares = rss;
    out.points_used = usable.size();
    return out;
}

}  // namespace

FitResult fit_power_law(std::span<const FitPoint> error_points) {
    std::vector<FitPoint> losses;
    losses.reserve(error_points.size());
    for (const auto& p : error_points) {
        losses.push_back({p.length, error_to_loss(p.value)});
    }
    return fit_losses(losses);
}

FitResult fit_power_law_losses(std::span<const FitPoint> loss_points) {
    for (const auto& p : loss_points) {
        if (!(p.value >= 0.0)) {
            throw DomainError(fmt::format("losses must be >= 0, got {}", p.value));
        }
    }
    return fit_losses({loss_points.begin(), loss_points.end()});
}

}  // namespace dnc
