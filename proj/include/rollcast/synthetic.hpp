#pragma once

#include <cmath>
#include <cstdint>
#include <numbers>
#include <string>
#include <vector>

#include "rollcast/calendar.hpp"
#include "rollcast/errors.hpp"
#include "rollcast/rng.hpp"
#include "rollcast/series.hpp"

namespace rollcast {

inline std::vector<std::string> canonical_exog_names() {
    return {"dow_jones",   "nasdaq",      "sp500", "treasury_2y",
            "treasury_5y", "treasury_10y", "gold",  "crude_oil"};
}

/// Generative process for test panels: exogenous series are seeded random
/// walks; the target is a linear response to the previous interval's
/// exogenous values plus hour-of-day / day-of-week seasonal terms and
/// Gaussian noise. Identical spec (including seed) reproduces the panel
/// bit-exactly.
struct SyntheticSpec {
    std::uint64_t seed = 1;
    std::vector<double> coefficients = std::vector<double>(8, 0.2);  // weight per exogenous series
    double hour_amplitude = 0.0;  // seasonal weight on hour-of-day
    double dow_amplitude = 0.0;   // seasonal weight on day-of-week
    double noise_sigma = 0.0;     // dollars
    double base_price = 100.0;    // dollars

    void validate() const {
        if (noise_sigma < 0.0) throw Error("noise_sigma must be >= 0");
        if (base_price <= 0.0) throw Error("base_price must be > 0");
        if (coefficients.empty()) throw Error("coefficients must not be empty");
    }
};

/// target(t) = base_price + sum_j coef_j * exog_j(t-1) + seasonal(t) + noise(t).
/// The walks carry one extra pre-span step so the first row has a lagged value.
inline AlignedPanel generate_synthetic(const SyntheticSpec& spec, const TradingCalendar& cal,
                                       Date span_start, Date span_end) {
    spec.validate();
    auto days = trading_days(cal, span_start, span_end);
    if (days.empty()) throw EmptyIntersection("span contains no trading day");

    AlignedPanel panel;
    panel.calendar = cal;
    for (Date d : days)
        for (int s = 0; s < cal.slots_per_day(); ++s) panel.stamps.push_back({d, s});
    const std::size_t n = panel.stamps.size();
    const std::size_t k = spec.coefficients.size();

    panel.exog_names = k == 8 ? canonical_exog_names() : std::vector<std::string>{};
    if (panel.exog_names.empty())
        for (std::size_t j = 0; j < k; ++j) panel.exog_names.push_back("exog_" + std::to_string(j));

    // Random walks with one leading step at index -1, reflected at a positive
    // floor so bar values stay valid prices.
    const double floor_value = 1.0;
    std::vector<std::vector<double>> walks(k, std::vector<double>(n + 1));
    for (std::size_t j = 0; j < k; ++j) {
        Rng rng(spec.seed, j + 1);
        double v = 80.0 + 10.0 * static_cast<double>(j);
        for (std::size_t t = 0; t < n + 1; ++t) {
            v += rng.normal();
            if (v < floor_value) v = 2.0 * floor_value - v;
            walks[j][t] = v;
        }
    }
    panel.exog.assign(k, std::vector<double>(n));
    for (std::size_t j = 0; j < k; ++j)
        for (std::size_t t = 0; t < n; ++t) panel.exog[j][t] = walks[j][t + 1];

    Rng noise(spec.seed, 0);
    panel.target.resize(n);
    const double two_pi = 2.0 * std::numbers::pi;
    for (std::size_t t = 0; t < n; ++t) {
        const IntervalStamp& st = panel.stamps[t];
        double y = spec.base_price;
        for (std::size_t j = 0; j < k; ++j) y += spec.coefficients[j] * walks[j][t];  // lag 1
        y += spec.hour_amplitude *
             std::sin(two_pi * cal.hour_index(st.slot) / static_cast<double>(cal.hour_count()));
        y += spec.dow_amplitude * std::sin(two_pi * weekday_index(st.date) / 5.0);
        if (spec.noise_sigma > 0.0) y += noise.normal(0.0, spec.noise_sigma);
        panel.target[t] = y;
    }
    return panel;
}

}  // namespace rollcast
