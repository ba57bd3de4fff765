#pragma once

#include <deque>
#include <map>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "lem/rng.hpp"

namespace lem {

/// Counterparty id used for every trade settled against the DSO.
inline constexpr std::string_view kDsoId = "DSO";

enum class Side { buy, sell };

/// Settlement layer. DSO layers are named from the agent's side of the trade:
/// dso_buy is an agent importing at the utility price, dso_sell an agent
/// exporting at the feed-in tariff.
enum class Layer { p2p, dso_buy, dso_sell };

std::string_view to_string(Side side);
std::string_view to_string(Layer layer);
/// Throws std::invalid_argument for unknown names.
Layer layer_from_string(std::string_view name);

struct MarketBounds {
    double price_min = 20.0;
    double price_max = 600.0;
    double quantity_max = 180.0;
};

struct Order {
    std::string agent_id;
    Side side = Side::buy;
    double price = 0.0;     // currency per kWh
    double quantity = 0.0;  // kWh
    int step = 0;
    int arrival_rank = 0;
};

/// Throws std::invalid_argument when price or quantity leave the bounds.
void validate(const Order& order, const MarketBounds& bounds);

struct Trade {
    std::string buyer_id;
    std::string seller_id;
    double price = 0.0;
    double quantity = 0.0;
    Layer layer = Layer::p2p;
    int step = 0;
};

struct DsoTariff {
    std::vector<double> feed_in;
    std::vector<double> utility;

    double feed_in_at(int step) const;
    double utility_at(int step) const;
    double midpoint(int step) const { return 0.5 * (feed_in_at(step) + utility_at(step)); }
};

/// Checks feed_in < utility at every hour and both inside the price bounds.
void validate(const DsoTariff& tariff, const MarketBounds& bounds);

/// Delivery reliability as a moving average of delivered/cleared ratios.
struct Reputation {
    std::string agent_id;
    double score = 1.0;
    int window = 6;
    std::deque<double> ratios;
};

Reputation update_reputation(Reputation rep, double cleared_kwh, double delivered_kwh);

using ReputationMap = std::map<std::string, double, std::less<>>;

struct ClearingResult {
    std::vector<Trade> trades;
    std::optional<double> clearing_price;  // volume-weighted mean trade price
    double clearing_volume = 0.0;
    std::vector<Order> residual_buys;
    std::vector<Order> residual_sells;
};

/// Sealed-book double auction with midpoint pricing.
///
/// Buys are ranked by price descending, sells ascending; equal prices fall
/// back to arrival_rank, then reputation (higher first), then agent id. The
/// best remaining pair trades min(residuals) while bid >= ask. Orders must
/// share one step and an agent may not appear on both sides.
ClearingResult clear_market(std::vector<Order> orders, const ReputationMap& reputations = {});

/// Residual orders settle in full against the posted tariff for `step`.
std::vector<Trade> settle_dso(const std::vector<Order>& residual_buys,
                              const std::vector<Order>& residual_sells, const DsoTariff& tariff,
                              int step);

/// Assigns arrival_rank from a seeded random permutation.
std::vector<Order> arrival_shuffle(std::vector<Order> orders, Rng& rng);

}  // namespace lem
