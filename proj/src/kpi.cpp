#include "lem/kpi.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

#include "lem/exact_sum.hpp"

namespace lem {

const std::array<std::string_view, KpiRecord::kFieldCount>& KpiRecord::field_names() {
    static constexpr std::array<std::string_view, kFieldCount> names{
        "social_welfare",       "liquidity",
        "bid_ask_spread",       "price_volatility",
        "imbalance",            "congestion",
        "grid_balance",         "self_consumption",
        "flexibility_utilization", "coordination_score",
        "coordination_convergence", "p2p_trade_ratio",
        "grid_balance_index"};
    return names;
}

std::array<double, KpiRecord::kFieldCount> KpiRecord::values() const {
    return {social_welfare,          liquidity,          bid_ask_spread,
            price_volatility,        imbalance,          congestion,
            grid_balance,            self_consumption,   flexibility_utilization,
            coordination_score,      coordination_convergence, p2p_trade_ratio,
            grid_balance_index};
}

double social_welfare(std::span<const Trade> trades) {
    ExactSum sum;
    for (const auto& t : trades) sum.add(t.price * t.quantity);
    return sum.value();
}

double liquidity(std::span<const Trade> trades) {
    ExactSum sum;
    for (const auto& t : trades) sum.add(t.quantity);
    return sum.value();
}

SpreadResult bid_ask_spread(std::span<const Order> orders) {
    ExactSum asks;
    ExactSum bids;
    std::size_t n_asks = 0;
    std::size_t n_bids = 0;
    for (const auto& o : orders) {
        if (o.side == Side::sell) {
            asks.add(o.price);
            ++n_asks;
        } else {
            bids.add(o.price);
            ++n_bids;
        }
    }
    if (n_asks == 0 || n_bids == 0) return {};
    return {asks.value() / static_cast<double>(n_asks) - bids.value() / static_cast<double>(n_bids),
            true};
}

namespace {

double population_stddev(std::span<const double> history, int window) {
    if (window < 1) throw std::invalid_argument("window must be >= 1");
    const auto n = std::min<std::size_t>(history.size(), static_cast<std::size_t>(window));
    if (n < 2) return 0.0;
    const auto tail = history.last(n);
    const double mean = exact_sum(tail) / static_cast<double>(n);
    ExactSum ss;
    for (double v : tail) ss.add((v - mean) * (v - mean));
    return std::sqrt(ss.value() / static_cast<double>(n));
}

}  // namespace

double price_volatility(std::span<const double> price_history, int window) {
    return population_stddev(price_history, window);
}

double imbalance(double total_buy_kwh, double total_sell_kwh, double grid_capacity_kw) {
    if (!(grid_capacity_kw > 0.0)) throw std::invalid_argument("grid capacity must be positive");
    return std::clamp(std::abs(total_buy_kwh - total_sell_kwh) / grid_capacity_kw, 0.0, 1.0);
}

double self_consumption(double q_p2p, double q_dso) {
    const double total = q_p2p + q_dso;
    return total > 0.0 ? std::clamp(q_p2p / total, 0.0, 1.0) : 0.0;
}

double flexibility_utilization(double q_p2p, double q_available) {
    return q_available > 0.0 ? std::clamp(q_p2p / q_available, 0.0, 1.0) : 0.0;
}

double coordination_score(double imbalance) { return 1.0 - imbalance; }

double coordination_convergence(std::span<const double> volume_history, int window) {
    return 1.0 / (1.0 + population_stddev(volume_history, window));
}

double grid_balance_index(double grid_balance, double losses_kwh, double dso_volume,
                          double grid_capacity_kw) {
    if (!(grid_capacity_kw > 0.0)) throw std::invalid_argument("grid capacity must be positive");
    const double stress = (std::abs(grid_balance) + losses_kwh + dso_volume) / grid_capacity_kw;
    return 1.0 - std::min(1.0, stress);
}

double agent_responsiveness(std::span<const double> kpi_series,
                            std::span<const double> action_series) {
    if (kpi_series.size() != action_series.size())
        throw std::invalid_argument("responsiveness series differ in length");
    const std::size_t n = kpi_series.size();
    if (n < 2) return 0.0;
    const double mx = exact_sum(kpi_series) / static_cast<double>(n);
    const double my = exact_sum(action_series) / static_cast<double>(n);
    ExactSum sxy;
    ExactSum sxx;
    ExactSum syy;
    for (std::size_t i = 0; i < n; ++i) {
        const double dx = kpi_series[i] - mx;
        const double dy = action_series[i] - my;
        sxy.add(dx * dy);
        sxx.add(dx * dx);
        syy.add(dy * dy);
    }
    if (sxx.value() <= 0.0 || syy.value() <= 0.0) return 0.0;
    return std::clamp(sxy.value() / std::sqrt(sxx.value() * syy.value()), -1.0, 1.0);
}

KpiTracker::KpiTracker(double grid_capacity_kw, int window, double loss_fraction)
    : grid_capacity_kw_(grid_capacity_kw), window_(window), loss_fraction_(loss_fraction) {
    if (!(grid_capacity_kw_ > 0.0)) throw std::invalid_argument("grid capacity must be positive");
    if (window_ < 1) throw std::invalid_argument("KPI window must be >= 1");
    if (!(loss_fraction_ >= 0.0 && loss_fraction_ <= 1.0))
        throw std::invalid_argument("loss fraction must lie in [0, 1]");
}

void KpiTracker::reset() {
    prices_.clear();
    volumes_.clear();
}

KpiRecord KpiTracker::update(const KpiStepInput& step) {
    std::vector<Trade> p2p;
    ExactSum dso_volume;
    ExactSum total_buy;
    ExactSum total_sell;
    for (const auto& t : step.trades) {
        if (t.layer == Layer::p2p) {
            p2p.push_back(t);
            total_buy.add(t.quantity);
            total_sell.add(t.quantity);
        } else {
            dso_volume.add(t.quantity);
            (t.layer == Layer::dso_buy ? total_buy : total_sell).add(t.quantity);
        }
    }

    KpiRecord k;
    k.social_welfare = social_welfare(step.trades);
    k.liquidity = liquidity(p2p);
    k.bid_ask_spread = bid_ask_spread(step.orders).spread;
    if (k.liquidity > 0.0) prices_.push_back(social_welfare(p2p) / k.liquidity);
    k.price_volatility = price_volatility(prices_, window_);
    k.imbalance = imbalance(total_buy.value(), total_sell.value(), grid_capacity_kw_);
    k.congestion = step.congestion;
    k.grid_balance = step.grid_balance;
    k.self_consumption = self_consumption(k.liquidity, dso_volume.value());
    k.flexibility_utilization = flexibility_utilization(k.liquidity, step.available_flex_kwh);
    k.coordination_score = coordination_score(k.imbalance);
    volumes_.push_back(k.liquidity);
    k.coordination_convergence = coordination_convergence(volumes_, window_);
    k.p2p_trade_ratio = k.self_consumption;
    k.grid_balance_index = grid_balance_index(k.grid_balance, loss_fraction_ * k.liquidity,
                                              dso_volume.value(), grid_capacity_kw_);
    return k;
}

}  // namespace lem
