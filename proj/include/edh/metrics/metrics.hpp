#pragma once

#include <optional>
#include <string>
#include <vector>

#include "edh/util/json_io.hpp"
#include "edh/worldsim/types.hpp"

namespace edh::metrics {

// How a reference interaction counts as "present" in the predicted
// trajectory. Ordered is greedy in-order subsequence matching; Multiset
// ignores order and clips by multiplicity.
enum class MatchMode { Ordered, Multiset };

// Number of reference interactions realized by the predicted trajectory.
// Navigation, dialog and Stop entries of `predicted` are skipped.
std::size_t matched_count(const std::vector<worldsim::ActionRef>& predicted,
                          const std::vector<worldsim::ActionRef>& reference, MatchMode mode = MatchMode::Ordered);

double success(const std::vector<worldsim::ActionRef>& predicted, const std::vector<worldsim::ActionRef>& reference,
               MatchMode mode = MatchMode::Ordered);
double goal_condition(const std::vector<worldsim::ActionRef>& predicted,
                      const std::vector<worldsim::ActionRef>& reference, MatchMode mode = MatchMode::Ordered);

// m * ref_len / max(ref_len, pred_len). Throws when both lengths are zero.
double tlw(double m, std::size_t ref_len, std::size_t pred_len);

// Trajectory length of a prediction: executed actions, Stop excluded.
std::size_t trajectory_length(const std::vector<worldsim::ActionRef>& predicted);

struct InstanceScore {
  std::string instance_id;
  double success = 0.0;
  double gc = 0.0;
  double tlw_success = 0.0;
  double tlw_gc = 0.0;
  std::size_t reference_length = 0;   // |A^I_R|
  std::size_t predicted_length = 0;   // |A_F|
};

InstanceScore score_instance(const std::string& instance_id, const std::vector<worldsim::ActionRef>& predicted,
                             const std::vector<worldsim::ActionRef>& reference, MatchMode mode = MatchMode::Ordered);

struct RougeScore {
  double precision = 0.0;
  double recall = 0.0;
  double f1 = 0.0;
};

RougeScore rouge_n(const std::vector<std::string>& predicted, const std::vector<std::string>& reference, int n);
RougeScore rouge_l(const std::vector<std::string>& predicted, const std::vector<std::string>& reference);

struct PlanScore {
  std::string instance_id;
  RougeScore rouge1, rouge2, rougeL;
};

PlanScore score_plan(const std::string& instance_id, const std::vector<std::string>& predicted,
                     const std::vector<std::string>& reference);

// Macro averages in [0,1]. Optional blocks are filled only by the kind of
// evaluation that produces them.
struct MetricsReport {
  std::string split;
  std::string model;
  std::size_t instances = 0;
  std::optional<double> sr, gc, tlw_sr, tlw_gc;
  std::optional<double> rouge1, rouge2, rougeL;
  std::optional<double> f1;

  bool operator==(const MetricsReport&) const = default;
};

MetricsReport aggregate(const std::vector<InstanceScore>& scores);
MetricsReport aggregate(const std::vector<PlanScore>& scores);

// Unweighted mean; summation runs over sorted values so any permutation of
// the input gives the same bits.
double macro_mean(std::vector<double> values);

// Percent with two decimals, e.g. 0.0885 -> "8.85".
std::string percent(double value);

Json to_json(const MetricsReport& report);
MetricsReport report_from_json(const Json& j);

// Aligned text table; one row per report. Action reports render as
// "SR [TLW]  GC [TLW]", plan reports as "R-1 R-2 R-L".
std::string format_table(const std::vector<MetricsReport>& reports);

}  // namespace edh::metrics
