#include "lem/market.hpp"

#include "lem/exact_sum.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <set>
#include <stdexcept>
#include <tuple>

namespace lem {

std::string_view to_string(Side side) { return side == Side::buy ? "buy" : "sell"; }

std::string_view to_string(Layer layer) {
    switch (layer) {
        case Layer::p2p: return "P2P";
        case Layer::dso_buy: return "DSO_buy";
        case Layer::dso_sell: return "DSO_sell";
    }
    return "P2P";
}

Layer layer_from_string(std::string_view name) {
    if (name == "P2P") return Layer::p2p;
    if (name == "DSO_buy") return Layer::dso_buy;
    if (name == "DSO_sell") return Layer::dso_sell;
    throw std::invalid_argument("unknown trade layer '" + std::string(name) + "'");
}

void validate(const Order& order, const MarketBounds& bounds) {
    if (!(order.price >= bounds.price_min && order.price <= bounds.price_max))
        throw std::invalid_argument("order price outside [" + std::to_string(bounds.price_min) +
                                    ", " + std::to_string(bounds.price_max) + "]");
    if (!(order.quantity >= 0.0 && order.quantity <= bounds.quantity_max))
        throw std::invalid_argument("order quantity outside [0, " +
                                    std::to_string(bounds.quantity_max) + "]");
}

namespace {

double at_hour(const std::vector<double>& prices, int step, const char* what) {
    if (step < 0 || step >= static_cast<int>(prices.size()))
        throw std::out_of_range(std::string(what) + " has no price for step " +
                                std::to_string(step));
    return prices[static_cast<std::size_t>(step)];
}

}  // namespace

double DsoTariff::feed_in_at(int step) const { return at_hour(feed_in, step, "feed-in tariff"); }
double DsoTariff::utility_at(int step) const { return at_hour(utility, step, "utility tariff"); }

void validate(const DsoTariff& tariff, const MarketBounds& bounds) {
    if (tariff.feed_in.empty() || tariff.feed_in.size() != tariff.utility.size())
        throw std::invalid_argument("tariff needs equal-length, non-empty feed-in and utility");
    for (std::size_t t = 0; t < tariff.feed_in.size(); ++t) {
        const double f = tariff.feed_in[t];
        const double u = tariff.utility[t];
        if (!(f < u))
            throw std::invalid_argument("feed-in must be below utility at hour " +
                                        std::to_string(t));
        if (!(f >= bounds.price_min && u <= bounds.price_max))
            throw std::invalid_argument("tariff outside price bounds at hour " +
                                        std::to_string(t));
    }
}

Reputation update_reputation(Reputation rep, double cleared_kwh, double delivered_kwh) {
    if (!(cleared_kwh >= 0.0) || !(delivered_kwh >= 0.0))
        throw std::invalid_argument("reputation inputs must be >= 0");
    if (delivered_kwh > cleared_kwh)
        throw std::invalid_argument("delivered energy exceeds cleared energy");
    if (rep.window < 1) throw std::invalid_argument("reputation window must be >= 1");
    const double ratio = cleared_kwh > 0.0 ? delivered_kwh / cleared_kwh : 1.0;
    rep.ratios.push_back(ratio);
    while (static_cast<int>(rep.ratios.size()) > rep.window) rep.ratios.pop_front();
    const double sum = std::accumulate(rep.ratios.begin(), rep.ratios.end(), 0.0);
    rep.score = std::clamp(sum / static_cast<double>(rep.ratios.size()), 0.0, 1.0);
    return rep;
}

ClearingResult clear_market(std::vector<Order> orders, const ReputationMap& reputations) {
    ClearingResult result;
    if (orders.empty()) return result;

    const int step = orders.front().step;
    std::set<std::string, std::less<>> buyers;
    std::set<std::string, std::less<>> sellers;
    for (const auto& o : orders) {
        if (o.step != step) throw std::invalid_argument("orders from different steps");
        if (!(o.quantity >= 0.0) || !std::isfinite(o.price))
            throw std::invalid_argument("malformed order from '" + o.agent_id + "'");
        (o.side == Side::buy ? buyers : sellers).insert(o.agent_id);
    }
    for (const auto& id : buyers)
        if (sellers.contains(id))
            throw std::invalid_argument("agent '" + id + "' has orders on both sides");

    const auto rep_of = [&](const Order& o) {
        const auto it = reputations.find(o.agent_id);
        return it == reputations.end() ? 1.0 : it->second;
    };

    std::vector<Order> buys;
    std::vector<Order> sells;
    for (auto& o : orders) {
        if (o.quantity <= 0.0) continue;
        (o.side == Side::buy ? buys : sells).push_back(std::move(o));
    }
    std::ranges::stable_sort(buys, [&](const Order& a, const Order& b) {
        return std::make_tuple(-a.price, a.arrival_rank, -rep_of(a), std::cref(a.agent_id)) <
               std::make_tuple(-b.price, b.arrival_rank, -rep_of(b), std::cref(b.agent_id));
    });
    std::ranges::stable_sort(sells, [&](const Order& a, const Order& b) {
        return std::make_tuple(a.price, a.arrival_rank, -rep_of(a), std::cref(a.agent_id)) <
               std::make_tuple(b.price, b.arrival_rank, -rep_of(b), std::cref(b.agent_id));
    });

    std::size_t i = 0;
    std::size_t j = 0;
    ExactSum volume;
    ExactSum value;
    while (i < buys.size() && j < sells.size() && buys[i].price >= sells[j].price) {
        Order& bid = buys[i];
        Order& ask = sells[j];
        const double qty = std::min(bid.quantity, ask.quantity);
        const double price = 0.5 * (bid.price + ask.price);
        result.trades.push_back({bid.agent_id, ask.agent_id, price, qty, Layer::p2p, step});
        volume.add(qty);
        value.add(price * qty);
        // The smaller side reaches exactly zero, so residuals conserve energy.
        if (bid.quantity == qty) {
            bid.quantity = 0.0;
            ++i;
        } else {
            bid.quantity -= qty;
        }
        if (ask.quantity == qty) {
            ask.quantity = 0.0;
            ++j;
        } else {
            ask.quantity -= qty;
        }
    }
    result.clearing_volume = volume.value();
    if (result.clearing_volume > 0.0)
        result.clearing_price = value.value() / result.clearing_volume;

    for (auto& o : buys)
        if (o.quantity > 0.0) result.residual_buys.push_back(std::move(o));
    for (auto& o : sells)
        if (o.quantity > 0.0) result.residual_sells.push_back(std::move(o));
    return result;
}

std::vector<Trade> settle_dso(const std::vector<Order>& residual_buys,
                              const std::vector<Order>& residual_sells, const DsoTariff& tariff,
                              int step) {
    std::vector<Trade> trades;
    trades.reserve(residual_buys.size() + residual_sells.size());
    const std::string dso(kDsoId);
    for (const auto& o : residual_buys)
        if (o.quantity > 0.0)
            trades.push_back({o.agent_id, dso, tariff.utility_at(step), o.quantity,
                              Layer::dso_buy, step});
    for (const auto& o : residual_sells)
        if (o.quantity > 0.0)
            trades.push_back({dso, o.agent_id, tariff.feed_in_at(step), o.quantity,
                              Layer::dso_sell, step});
    return trades;
}

std::vector<Order> arrival_shuffle(std::vector<Order> orders, Rng& rng) {
    std::vector<int> ranks(orders.size());
    std::iota(ranks.begin(), ranks.end(), 0);
    // Fisher-Yates driven by Rng::below so the permutation is library-independent.
    for (std::size_t k = ranks.size(); k > 1; --k)
        std::swap(ranks[k - 1], ranks[rng.below(k)]);
    for (std::size_t k = 0; k < orders.size(); ++k) orders[k].arrival_rank = ranks[k];
    return orders;
}

}  // namespace lem
