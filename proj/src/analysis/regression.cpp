#include "arena/analysis/regression.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <set>

#include <boost/math/distributions/students_t.hpp>
#include <fmt/format.h>

#include "arena/errors.hpp"
#include "arena/util/rng.hpp"

namespace arena {

namespace {

constexpr const char* kIntercept = "(intercept)";

std::string num(double x) { return fmt::format("{}", x); }
std::string flag(bool b) { return b ? "true" : "false"; }
std::string horizon_label(const Horizon& h) { return h.infinite ? "inf" : std::to_string(h.rounds); }

// Numeric labels sort by value ("inf" last), everything else lexically.
bool level_less(const std::string& a, const std::string& b) {
  auto as_number = [](const std::string& s) -> std::optional<double> {
    if (s == "inf") return HUGE_VAL;
    try {
      std::size_t used = 0;
      const double v = std::stod(s, &used);
      if (used == s.size()) return v;
    } catch (const std::exception&) {
    }
    return std::nullopt;
  };
  const auto na = as_number(a);
  const auto nb = as_number(b);
  if (na && nb) return *na < *nb;
  if (na != nb) return na.has_value();
  return a < b;
}

std::vector<std::string> sorted_levels(const std::set<std::string>& values) {
  std::vector<std::string> out(values.begin(), values.end());
  std::sort(out.begin(), out.end(), level_less);
  return out;
}

struct MarketParts {
  std::string horizon, ci, comm;
};

const char* comm_key(GameFamily f) { return f == GameFamily::Persuasion ? "MT" : "MA"; }

std::string market_label(GameFamily f, const MarketParts& m) {
  return fmt::format("T={},CI={},{}={}", m.horizon, m.ci, comm_key(f), m.comm);
}

struct RowValues {
  std::map<std::string, std::string> values;  // block -> level
  MarketParts market;
};

RowValues row_values(const Transcript& t, EncodeMode mode) {
  RowValues r;
  auto& v = r.values;
  std::visit(
      [&](const auto& c) {
        using T = std::decay_t<decltype(c)>;
        if constexpr (std::is_same_v<T, BargainingConfig>) {
          v["delta_a"] = num(c.delta_a);
          v["delta_b"] = num(c.delta_b);
          v["money"] = std::to_string(c.money);
          r.market = {horizon_label(c.horizon), flag(c.complete_info), flag(c.messages_allowed)};
        } else if constexpr (std::is_same_v<T, NegotiationConfig>) {
          v["f_a"] = num(c.f_a);
          v["f_b"] = num(c.f_b);
          v["money"] = std::to_string(c.money);
          r.market = {horizon_label(c.horizon), flag(c.complete_info), flag(c.messages_allowed)};
        } else {
          v["prior_p"] = num(c.prior_p);
          v["value_v"] = num(c.value_v);
          v["money"] = std::to_string(c.money);
          v["buyer"] = std::string(to_string(c.buyer_mode));
          r.market = {horizon_label(c.horizon), flag(c.complete_info), std::string(to_string(c.message_mode))};
        }
      },
      t.config.params);
  v["market"] = market_label(t.config.family(), r.market);
  if (mode == EncodeMode::PerPlayer) {
    v["alice"] = t.alice_agent;
    v["bob"] = t.bob_agent;
  } else {
    v["pair"] = t.alice_agent + "," + t.bob_agent;
  }
  return r;
}

std::vector<std::string> block_order(GameFamily family, EncodeMode mode) {
  std::vector<std::string> out;
  switch (family) {
    case GameFamily::Bargaining: out = {"delta_a", "delta_b", "money", "market"}; break;
    case GameFamily::Negotiation: out = {"f_a", "f_b", "money", "market"}; break;
    case GameFamily::Persuasion: out = {"prior_p", "value_v", "money", "market", "buyer"}; break;
  }
  if (mode == EncodeMode::PerPlayer) {
    out.insert(out.end(), {"alice", "bob"});
  } else {
    out.push_back("pair");
  }
  return out;
}

bool is_vacuous(const MetricSet& m, Metric metric) {
  return (metric == Metric::Efficiency && m.efficiency_vacuous) ||
         (metric == Metric::Fairness && m.fairness_vacuous);
}

}  // namespace

EncodeMode parse_encode_mode(std::string_view text) {
  if (text == "per-player" || text == "per_player" || text == "player") return EncodeMode::PerPlayer;
  if (text == "pair") return EncodeMode::Pair;
  throw InvalidConfig(fmt::format("unknown encoding mode '{}' (expected per-player or pair)", text));
}

const Block& DesignMatrix::block(std::string_view name) const {
  for (const auto& b : blocks) {
    if (b.name == name) return b;
  }
  throw UnknownBlock(fmt::format("no block named '{}'", name));
}

std::map<std::string, std::string> default_levels(GameFamily family) {
  switch (family) {
    case GameFamily::Bargaining:
      return {{"delta_a", "0.9"}, {"delta_b", "0.9"}, {"money", "10000"},
              {"market", market_label(family, {"inf", "true", "false"})}};
    case GameFamily::Negotiation:
      return {{"f_a", "1"}, {"f_b", "1"}, {"money", "10000"},
              {"market", market_label(family, {"1", "true", "false"})}};
    case GameFamily::Persuasion:
      return {{"prior_p", "0.5"}, {"value_v", "1.25"}, {"money", "10000"},
              {"market", market_label(family, {"20", "true", "binary"})}, {"buyer", "long_living"}};
  }
  return {};
}

EncodedData encode(const std::vector<Transcript>& games, Metric metric, const EncodeOptions& options) {
  std::vector<const Transcript*> kept;
  for (const auto& t : games) {
    if (!t.metrics) continue;
    if (t.excluded && !options.include_excluded) continue;
    if (is_vacuous(*t.metrics, metric) && !options.include_vacuous) continue;
    kept.push_back(&t);
  }
  if (kept.empty()) throw TooFewGames("no games with metrics left to encode");
  const GameFamily family = kept.front()->config.family();
  for (const auto* t : kept) {
    if (t->config.family() != family) {
      throw MixedFamilies(fmt::format("games from both {} and {}", to_string(family), to_string(t->config.family())));
    }
  }

  std::vector<RowValues> rows;
  rows.reserve(kept.size());
  for (const auto* t : kept) rows.push_back(row_values(*t, options.mode));

  const auto defaults = default_levels(family);
  const auto order = block_order(family, options.mode);

  EncodedData data;
  data.family = family;
  data.metric = metric;
  auto& design = data.design;
  design.columns.push_back(kIntercept);
  for (const auto& name : order) {
    Block b;
    b.name = name;
    std::set<std::string> observed;
    for (const auto& r : rows) observed.insert(r.values.at(name));
    if (name == "market") {
      // Every combination of the observed market axes, seen or not.
      std::set<std::string> hs, cis, comms;
      for (const auto& r : rows) {
        hs.insert(r.market.horizon);
        cis.insert(r.market.ci);
        comms.insert(r.market.comm);
      }
      for (const auto& h : sorted_levels(hs))
        for (const auto& ci : sorted_levels(cis))
          for (const auto& c : sorted_levels(comms)) b.levels.push_back(market_label(family, {h, ci, c}));
    } else {
      b.levels = sorted_levels(observed);
    }
    if (const auto it = options.allowed_levels.find(name); it != options.allowed_levels.end()) {
      for (const auto& v : observed) {
        if (std::find(it->second.begin(), it->second.end(), v) == it->second.end()) {
          throw UnknownLevel(fmt::format("block '{}' has no level '{}'", name, v));
        }
      }
      b.levels = it->second;
    }
    std::optional<std::string> wanted;
    if (const auto d = defaults.find(name); d != defaults.end()) wanted = d->second;
    if ((name == "alice" || name == "bob") && options.reference_agent) wanted = options.reference_agent;
    const bool has_wanted = wanted && std::find(b.levels.begin(), b.levels.end(), *wanted) != b.levels.end();
    b.reference = has_wanted ? *wanted : b.levels.front();
    for (const auto& level : b.levels) {
      if (level == b.reference) {
        b.columns.push_back(-1);
      } else {
        b.columns.push_back(static_cast<int>(design.columns.size()));
        design.columns.push_back(name + "=" + level);
      }
    }
    design.blocks.push_back(std::move(b));
  }

  const auto n = static_cast<Eigen::Index>(rows.size());
  const auto k = static_cast<Eigen::Index>(design.columns.size());
  design.X = Eigen::MatrixXd::Zero(n, k);
  data.y.resize(n);
  for (Eigen::Index i = 0; i < n; ++i) {
    const auto& r = rows[static_cast<std::size_t>(i)];
    design.X(i, 0) = 1.0;
    for (const auto& b : design.blocks) {
      const auto pos = std::find(b.levels.begin(), b.levels.end(), r.values.at(b.name)) - b.levels.begin();
      const int col = b.columns[static_cast<std::size_t>(pos)];
      if (col >= 0) design.X(i, col) = 1.0;
    }
    data.y(i) = metric_value(*kept[static_cast<std::size_t>(i)]->metrics, metric);
    design.row_ids.push_back(kept[static_cast<std::size_t>(i)]->game_id);
  }
  return data;
}

int FitResult::column_index(std::string_view name) const {
  for (std::size_t i = 0; i < columns.size(); ++i) {
    if (columns[i] == name) return static_cast<int>(i);
  }
  return -1;
}

std::vector<std::string> aliased_columns(const Eigen::MatrixXd& X, const std::vector<std::string>& columns) {
  if (Eigen::ColPivHouseholderQR<Eigen::MatrixXd>(X).rank() == X.cols()) return {};
  // Greedy pass: a column that adds no rank is expressed in terms of the
  // independent columns kept so far; it and its non-zero partners are aliased.
  std::vector<Eigen::Index> independent;
  std::set<std::size_t> aliased;
  for (Eigen::Index j = 0; j < X.cols(); ++j) {
    Eigen::MatrixXd sub(X.rows(), static_cast<Eigen::Index>(independent.size()) + 1);
    for (std::size_t c = 0; c < independent.size(); ++c) sub.col(static_cast<Eigen::Index>(c)) = X.col(independent[c]);
    sub.col(sub.cols() - 1) = X.col(j);
    if (Eigen::ColPivHouseholderQR<Eigen::MatrixXd>(sub).rank() == sub.cols()) {
      independent.push_back(j);
      continue;
    }
    aliased.insert(static_cast<std::size_t>(j));
    if (independent.empty()) continue;
    const Eigen::MatrixXd base = sub.leftCols(sub.cols() - 1);
    const Eigen::VectorXd coef = base.colPivHouseholderQr().solve(Eigen::VectorXd(X.col(j)));
    const double scale = std::max(1.0, coef.cwiseAbs().maxCoeff());
    for (Eigen::Index c = 0; c < coef.size(); ++c) {
      if (std::abs(coef(c)) > 1e-8 * scale) aliased.insert(static_cast<std::size_t>(independent[static_cast<std::size_t>(c)]));
    }
  }
  std::vector<std::string> out;
  for (auto idx : aliased) out.push_back(idx < columns.size() ? columns[idx] : fmt::format("column {}", idx));
  return out;
}

FitResult fit_ols(const Eigen::MatrixXd& X, const Eigen::VectorXd& y, const std::vector<std::string>& columns) {
  const auto n = X.rows();
  const auto k = X.cols();
  if (y.size() != n) throw InvalidConfig("design and target have different row counts");
  if (static_cast<Eigen::Index>(columns.size()) != k) throw InvalidConfig("column names do not match the design");
  if (n <= k) throw TooFewGames(fmt::format("{} rows for {} columns; need more rows than columns", n, k));
  if (auto aliased = aliased_columns(X, columns); !aliased.empty()) {
    std::string names;
    for (const auto& a : aliased) names += (names.empty() ? "" : ", ") + a;
    throw RankDeficient(fmt::format("design is rank deficient; aliased columns: {}", names), std::move(aliased));
  }

  FitResult fit;
  fit.columns = columns;
  fit.n = static_cast<int>(n);
  fit.k = static_cast<int>(k);
  const Eigen::HouseholderQR<Eigen::MatrixXd> qr(X);
  fit.beta = qr.solve(y);
  const Eigen::VectorXd resid = y - X * fit.beta;
  fit.rss = resid.squaredNorm();
  fit.sigma2 = fit.rss / static_cast<double>(n - k);
  // (X'X)^-1 = R^-1 R^-T, so its diagonal is the squared row norms of R^-1.
  const Eigen::MatrixXd R = qr.matrixQR().topRows(k).triangularView<Eigen::Upper>();
  const Eigen::MatrixXd Rinv =
      R.triangularView<Eigen::Upper>().solve(Eigen::MatrixXd::Identity(k, k));
  fit.se = (Rinv.rowwise().squaredNorm() * fit.sigma2).cwiseSqrt();
  const boost::math::students_t dist(static_cast<double>(n - k));
  fit.t_quantile = boost::math::quantile(dist, 0.975);
  fit.ci_low = fit.beta - fit.t_quantile * fit.se;
  fit.ci_high = fit.beta + fit.t_quantile * fit.se;
  fit.train_rmse = std::sqrt(fit.rss / static_cast<double>(n));
  return fit;
}

FitResult fit_ols(const EncodedData& data) {
  FitResult fit = fit_ols(data.design.X, data.y, data.design.columns);
  fit.blocks = data.design.blocks;
  return fit;
}

EffectTable effect_table(const FitResult& fit, std::string_view block) {
  const auto it = std::find_if(fit.blocks.begin(), fit.blocks.end(), [&](const Block& b) { return b.name == block; });
  if (it == fit.blocks.end()) throw UnknownBlock(fmt::format("no block named '{}'", block));
  EffectTable table;
  table.block = it->name;
  table.reference = it->reference;
  for (std::size_t i = 0; i < it->levels.size(); ++i) {
    const int col = it->columns[i];
    if (col < 0) continue;
    table.rows.push_back(EffectRow{it->levels[i], fit.beta(col), fit.se(col), fit.ci_low(col), fit.ci_high(col)});
  }
  return table;
}

void LinearRegressor::fit(const Eigen::MatrixXd& X, const Eigen::VectorXd& y) {
  beta_ = Eigen::CompleteOrthogonalDecomposition<Eigen::MatrixXd>(X).solve(y);
}

Eigen::VectorXd LinearRegressor::predict(const Eigen::MatrixXd& X) const { return X * beta_; }

std::vector<RmseSummary> validate_rmse(const Eigen::MatrixXd& X, const Eigen::VectorXd& y, std::uint64_t split_seed,
                                       int repeats, const std::vector<std::shared_ptr<Regressor>>& models) {
  const auto n = X.rows();
  if (n < kMinValidationGames) {
    throw TooFewGames(fmt::format("{} games; hold-out validation needs at least {}", n, kMinValidationGames));
  }
  if (repeats < 1) throw InvalidConfig("repeats must be >= 1");
  std::vector<std::shared_ptr<Regressor>> active = models;
  if (active.empty()) active.push_back(std::make_shared<LinearRegressor>());

  const auto n_train = static_cast<Eigen::Index>(std::floor(0.8 * static_cast<double>(n)));
  const auto n_test = n - n_train;
  std::vector<RmseSummary> out(active.size());
  for (std::size_t m = 0; m < active.size(); ++m) out[m].model = active[m]->name();

  std::vector<Eigen::Index> idx(static_cast<std::size_t>(n));
  for (int r = 0; r < repeats; ++r) {
    std::iota(idx.begin(), idx.end(), Eigen::Index{0});
    Rng rng(combine_seeds({split_seed, static_cast<std::uint64_t>(r)}));
    for (auto i = static_cast<std::int64_t>(n) - 1; i > 0; --i) {
      std::swap(idx[static_cast<std::size_t>(i)], idx[static_cast<std::size_t>(uniform_int(rng, 0, i))]);
    }
    Eigen::MatrixXd Xtr(n_train, X.cols()), Xte(n_test, X.cols());
    Eigen::VectorXd ytr(n_train), yte(n_test);
    for (Eigen::Index i = 0; i < n; ++i) {
      const auto src = idx[static_cast<std::size_t>(i)];
      if (i < n_train) {
        Xtr.row(i) = X.row(src);
        ytr(i) = y(src);
      } else {
        Xte.row(i - n_train) = X.row(src);
        yte(i - n_train) = y(src);
      }
    }
    for (std::size_t m = 0; m < active.size(); ++m) {
      active[m]->fit(Xtr, ytr);
      const Eigen::VectorXd err = active[m]->predict(Xte) - yte;
      out[m].per_seed.push_back(std::sqrt(err.squaredNorm() / static_cast<double>(n_test)));
    }
  }
  for (auto& s : out) {
    const double count = static_cast<double>(s.per_seed.size());
    s.mean = std::accumulate(s.per_seed.begin(), s.per_seed.end(), 0.0) / count;
    double ss = 0.0;
    for (double v : s.per_seed) ss += (v - s.mean) * (v - s.mean);
    s.sd = s.per_seed.size() > 1 ? std::sqrt(ss / (count - 1.0)) : 0.0;
  }
  return out;
}

std::vector<RmseSummary> validate_rmse(const std::vector<Transcript>& games, Metric metric, std::uint64_t split_seed,
                                       int repeats, const EncodeOptions& options) {
  const auto data = encode(games, metric, options);
  return validate_rmse(data.design.X, data.y, split_seed, repeats);
}

void write_effects_csv(std::ostream& out, const EncodedData& data, const FitResult& fit) {
  out << "family,metric,block,level,reference,delta,se,ci_low,ci_high\n";
  const auto fam = to_string(data.family);
  const auto met = to_string(data.metric);
  out << fmt::format("{},{},{},{},false,{},{},{},{}\n", fam, met, kIntercept, kIntercept, fit.beta(0), fit.se(0),
                     fit.ci_low(0), fit.ci_high(0));
  for (const auto& b : fit.blocks) {
    const auto table = effect_table(fit, b.name);
    out << fmt::format("{},{},{},\"{}\",true,0,0,0,0\n", fam, met, b.name, table.reference);
    for (const auto& r : table.rows) {
      out << fmt::format("{},{},{},\"{}\",false,{},{},{},{}\n", fam, met, b.name, r.level, r.delta, r.se, r.ci_low,
                         r.ci_high);
    }
  }
}

std::string format_report(const EncodedData& data, const FitResult& fit, const std::vector<RmseSummary>& validation) {
  std::string out = fmt::format("{} / {}: n = {}, k = {}, residual variance = {:.6g}\n", to_string(data.family),
                                to_string(data.metric), fit.n, fit.k, fit.sigma2);
  out += fmt::format("baseline (all defaults): {:.4f}  95% CI [{:.4f}, {:.4f}]\n", fit.beta(0), fit.ci_low(0),
                     fit.ci_high(0));
  out += "effects relative to the default level; * marks a CI that excludes 0\n";
  for (const auto& b : fit.blocks) {
    const auto table = effect_table(fit, b.name);
    out += fmt::format("\n{}\n", b.name);
    out += fmt::format("  {:<36} {:>9}  (default)\n", table.reference, "0");
    for (const auto& r : table.rows) {
      const bool sig = r.ci_low > 0.0 || r.ci_high < 0.0;
      out += fmt::format("  {:<36} {:>+9.4f}  [{:+.4f}, {:+.4f}]{}\n", r.level, r.delta, r.ci_low, r.ci_high,
                         sig ? " *" : "");
    }
  }
  if (fit.train_rmse) out += fmt::format("\ntraining RMSE: {:.4f}\n", *fit.train_rmse);
  for (const auto& v : validation) {
    out += fmt::format("held-out RMSE ({}, {} splits): {:.4f} +/- {:.4f}\n", v.model, v.per_seed.size(), v.mean, v.sd);
  }
  return out;
}

}  // namespace arena
