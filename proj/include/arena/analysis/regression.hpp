#pragma once

#include <cstdint>
#include <map>
#include <memory>
#include <optional>
#include <ostream>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "arena/core/transcript.hpp"

namespace arena {

enum class EncodeMode { PerPlayer, Pair };

EncodeMode parse_encode_mode(std::string_view text);

// One categorical feature. `levels` lists every level in display order;
// `reference` is the dropped level absorbed by the intercept; `columns[i]` is
// the design column of levels[i], or -1 for the reference.
struct Block {
  std::string name;
  std::vector<std::string> levels;
  std::string reference;
  std::vector<int> columns;
};

// Column 0 is always the intercept.
struct DesignMatrix {
  Eigen::MatrixXd X;
  std::vector<std::string> columns;
  std::vector<Block> blocks;
  std::vector<std::string> row_ids;

  const Block& block(std::string_view name) const;
};

struct EncodedData {
  GameFamily family = GameFamily::Bargaining;
  Metric metric = Metric::Efficiency;
  DesignMatrix design;
  Eigen::VectorXd y;
};

struct EncodeOptions {
  EncodeMode mode = EncodeMode::PerPlayer;
  // Keep games flagged excluded (failed, degraded, disqualified).
  bool include_excluded = false;
  // Keep persuasion rows whose target ratio had an empty denominator.
  bool include_vacuous = false;
  // Reference agent for identity blocks; defaults to the first level in
  // sorted order.
  std::optional<std::string> reference_agent;
  // When set, every value must be a known level of the named block.
  std::map<std::string, std::vector<std::string>> allowed_levels;
};

// Table-6 default of each parameter block, as a level label.
std::map<std::string, std::string> default_levels(GameFamily family);

// One-hot encoding with a composite market block (horizon type x complete
// info x message flag/type) and agent identity blocks. Throws MixedFamilies
// when games span families, UnknownLevel for values outside
// `allowed_levels`, and TooFewGames when nothing is left to encode.
EncodedData encode(const std::vector<Transcript>& games, Metric metric, const EncodeOptions& options = {});

struct FitResult {
  std::vector<std::string> columns;
  std::vector<Block> blocks;
  Eigen::VectorXd beta;
  Eigen::VectorXd se;
  Eigen::VectorXd ci_low;
  Eigen::VectorXd ci_high;
  double rss = 0.0;
  double sigma2 = 0.0;
  double t_quantile = 0.0;
  int n = 0;
  int k = 0;
  std::optional<double> train_rmse;
  std::optional<double> test_rmse;

  int column_index(std::string_view name) const;
};

// Least squares via Householder QR; SEs from R^-1, 95% Student-t intervals.
// Throws RankDeficient naming every column in a linear dependency, and
// TooFewGames unless n > k.
FitResult fit_ols(const Eigen::MatrixXd& X, const Eigen::VectorXd& y, const std::vector<std::string>& columns);
FitResult fit_ols(const EncodedData& data);

// Columns of X that take part in a linear dependency (empty when full rank).
std::vector<std::string> aliased_columns(const Eigen::MatrixXd& X, const std::vector<std::string>& columns);

struct EffectRow {
  std::string level;
  double delta = 0.0;
  double se = 0.0;
  double ci_low = 0.0;
  double ci_high = 0.0;
};

struct EffectTable {
  std::string block;
  std::string reference;  // the default level, delta 0 by construction
  std::vector<EffectRow> rows;  // non-default levels
};

// Throws UnknownBlock.
EffectTable effect_table(const FitResult& fit, std::string_view block);

// Model interface for the hold-out validation harness; other regressors
// (e.g. gradient boosting) can be attached by implementing it.
class Regressor {
 public:
  virtual ~Regressor() = default;
  virtual std::string name() const = 0;
  virtual void fit(const Eigen::MatrixXd& X, const Eigen::VectorXd& y) = 0;
  virtual Eigen::VectorXd predict(const Eigen::MatrixXd& X) const = 0;
};

// Minimum-norm least squares, so a training split that misses a rare level
// still yields predictions.
class LinearRegressor : public Regressor {
 public:
  std::string name() const override { return "linear_regression"; }
  void fit(const Eigen::MatrixXd& X, const Eigen::VectorXd& y) override;
  Eigen::VectorXd predict(const Eigen::MatrixXd& X) const override;

 private:
  Eigen::VectorXd beta_;
};

struct RmseSummary {
  std::string model;
  double mean = 0.0;
  double sd = 0.0;
  std::vector<double> per_seed;
};

inline constexpr int kMinValidationGames = 50;

// Random 80/20 splits (one per seed, seeds derived from `split_seed`);
// held-out RMSE per model, mean and sample sd over repeats. Throws
// TooFewGames below kMinValidationGames rows.
std::vector<RmseSummary> validate_rmse(const Eigen::MatrixXd& X, const Eigen::VectorXd& y, std::uint64_t split_seed,
                                       int repeats = 100,
                                       const std::vector<std::shared_ptr<Regressor>>& models = {});
std::vector<RmseSummary> validate_rmse(const std::vector<Transcript>& games, Metric metric, std::uint64_t split_seed,
                                       int repeats = 100, const EncodeOptions& options = {});

// Every effect row of every block as delimited text:
// family,metric,block,level,reference,delta,se,ci_low,ci_high
void write_effects_csv(std::ostream& out, const EncodedData& data, const FitResult& fit);

// Human-readable report: one section per block with the default level
// first, then each level's delta and 95% CI.
std::string format_report(const EncodedData& data, const FitResult& fit,
                          const std::vector<RmseSummary>& validation = {});

}  // namespace arena
