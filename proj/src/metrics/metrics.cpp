#include "edh/metrics/metrics.hpp"

#include <algorithm>
#include <cstdio>
#include <map>

#include "edh/util/error.hpp"

namespace edh::metrics {

using worldsim::ActionRef;

namespace {

std::vector<ActionRef> interactions_of(const std::vector<ActionRef>& actions) {
  std::vector<ActionRef> out;
  for (const auto& a : actions) {
    if (worldsim::is_interaction(a)) out.push_back(a);
  }
  return out;
}

double harmonic(double p, double r) { return p + r > 0.0 ? 2.0 * p * r / (p + r) : 0.0; }

RougeScore from_overlap(std::size_t overlap, std::size_t pred_total, std::size_t ref_total) {
  RougeScore s;
  s.precision = pred_total ? static_cast<double>(overlap) / static_cast<double>(pred_total) : 0.0;
  s.recall = ref_total ? static_cast<double>(overlap) / static_cast<double>(ref_total) : 0.0;
  s.f1 = harmonic(s.precision, s.recall);
  return s;
}

std::map<std::vector<std::string>, std::size_t> ngram_counts(const std::vector<std::string>& tokens, std::size_t n) {
  std::map<std::vector<std::string>, std::size_t> counts;
  for (std::size_t i = 0; i + n <= tokens.size(); ++i) {
    ++counts[std::vector<std::string>(tokens.begin() + static_cast<long>(i), tokens.begin() + static_cast<long>(i + n))];
  }
  return counts;
}

// Two-row LCS table.
std::size_t lcs_length(const std::vector<std::string>& a, const std::vector<std::string>& b) {
  std::vector<std::size_t> prev(b.size() + 1, 0), cur(b.size() + 1, 0);
  for (std::size_t i = 1; i <= a.size(); ++i) {
    for (std::size_t j = 1; j <= b.size(); ++j) {
      cur[j] = a[i - 1] == b[j - 1] ? prev[j - 1] + 1 : std::max(prev[j], cur[j - 1]);
    }
    std::swap(prev, cur);
  }
  return prev[b.size()];
}

template <typename T, typename F>
std::optional<double> mean_of(const std::vector<T>& items, F field) {
  if (items.empty()) return std::nullopt;
  std::vector<double> xs;
  xs.reserve(items.size());
  for (const auto& it : items) xs.push_back(field(it));
  return macro_mean(std::move(xs));
}

void put(Json& j, const char* key, const std::optional<double>& v) {
  if (v) j[key] = *v;
}

std::optional<double> get(const Json& j, const char* key) {
  if (!j.contains(key) || j[key].is_null()) return std::nullopt;
  return j[key].get<double>();
}

}  // namespace

std::size_t matched_count(const std::vector<ActionRef>& predicted, const std::vector<ActionRef>& reference,
                          MatchMode mode) {
  const auto pred = interactions_of(predicted);
  if (mode == MatchMode::Ordered) {
    std::size_t k = 0;
    for (const auto& a : pred) {
      if (k < reference.size() && a == reference[k]) ++k;
    }
    return k;
  }
  std::map<ActionRef, std::size_t> available;
  for (const auto& a : pred) ++available[a];
  std::size_t matched = 0;
  for (const auto& r : reference) {
    auto it = available.find(r);
    if (it != available.end() && it->second > 0) {
      --it->second;
      ++matched;
    }
  }
  return matched;
}

double success(const std::vector<ActionRef>& predicted, const std::vector<ActionRef>& reference, MatchMode mode) {
  return matched_count(predicted, reference, mode) == reference.size() ? 1.0 : 0.0;
}

double goal_condition(const std::vector<ActionRef>& predicted, const std::vector<ActionRef>& reference,
                      MatchMode mode) {
  if (reference.empty()) return 1.0;
  return static_cast<double>(matched_count(predicted, reference, mode)) / static_cast<double>(reference.size());
}

double tlw(double m, std::size_t ref_len, std::size_t pred_len) {
  if (ref_len == 0 && pred_len == 0) throw Error("tlw: reference and prediction lengths are both zero");
  return m * static_cast<double>(ref_len) / static_cast<double>(std::max(ref_len, pred_len));
}

std::size_t trajectory_length(const std::vector<ActionRef>& predicted) {
  return static_cast<std::size_t>(std::count_if(predicted.begin(), predicted.end(), [](const ActionRef& a) {
    return worldsim::is_navigation(a) || worldsim::is_interaction(a);
  }));
}

InstanceScore score_instance(const std::string& instance_id, const std::vector<ActionRef>& predicted,
                             const std::vector<ActionRef>& reference, MatchMode mode) {
  InstanceScore s;
  s.instance_id = instance_id;
  s.success = success(predicted, reference, mode);
  s.gc = goal_condition(predicted, reference, mode);
  s.reference_length = reference.size();
  s.predicted_length = trajectory_length(predicted);
  if (s.reference_length == 0 && s.predicted_length == 0) {
    s.tlw_success = s.success;
    s.tlw_gc = s.gc;
  } else {
    s.tlw_success = tlw(s.success, s.reference_length, s.predicted_length);
    s.tlw_gc = tlw(s.gc, s.reference_length, s.predicted_length);
  }
  return s;
}

RougeScore rouge_n(const std::vector<std::string>& predicted, const std::vector<std::string>& reference, int n) {
  if (n < 1) throw ConfigError("rouge_n: n must be positive");
  const auto un = static_cast<std::size_t>(n);
  const auto pc = ngram_counts(predicted, un);
  const auto rc = ngram_counts(reference, un);
  std::size_t overlap = 0;
  for (const auto& [gram, count] : pc) {
    auto it = rc.find(gram);
    if (it != rc.end()) overlap += std::min(count, it->second);
  }
  const std::size_t pred_total = predicted.size() >= un ? predicted.size() - un + 1 : 0;
  const std::size_t ref_total = reference.size() >= un ? reference.size() - un + 1 : 0;
  return from_overlap(overlap, pred_total, ref_total);
}

RougeScore rouge_l(const std::vector<std::string>& predicted, const std::vector<std::string>& reference) {
  return from_overlap(lcs_length(predicted, reference), predicted.size(), reference.size());
}

PlanScore score_plan(const std::string& instance_id, const std::vector<std::string>& predicted,
                     const std::vector<std::string>& reference) {
  return {instance_id, rouge_n(predicted, reference, 1), rouge_n(predicted, reference, 2),
          rouge_l(predicted, reference)};
}

double macro_mean(std::vector<double> values) {
  if (values.empty()) throw Error("macro_mean of an empty list");
  std::sort(values.begin(), values.end());
  double sum = 0.0;
  for (double v : values) sum += v;
  return sum / static_cast<double>(values.size());
}

MetricsReport aggregate(const std::vector<InstanceScore>& scores) {
  MetricsReport r;
  r.instances = scores.size();
  r.sr = mean_of(scores, [](const InstanceScore& s) { return s.success; });
  r.gc = mean_of(scores, [](const InstanceScore& s) { return s.gc; });
  r.tlw_sr = mean_of(scores, [](const InstanceScore& s) { return s.tlw_success; });
  r.tlw_gc = mean_of(scores, [](const InstanceScore& s) { return s.tlw_gc; });
  return r;
}

MetricsReport aggregate(const std::vector<PlanScore>& scores) {
  MetricsReport r;
  r.instances = scores.size();
  r.rouge1 = mean_of(scores, [](const PlanScore& s) { return s.rouge1.f1; });
  r.rouge2 = mean_of(scores, [](const PlanScore& s) { return s.rouge2.f1; });
  r.rougeL = mean_of(scores, [](const PlanScore& s) { return s.rougeL.f1; });
  return r;
}

std::string percent(double value) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.2f", value * 100.0);
  return buf;
}

Json to_json(const MetricsReport& report) {
  Json j;
  j["split"] = report.split;
  j["model"] = report.model;
  j["instances"] = report.instances;
  put(j, "sr", report.sr);
  put(j, "gc", report.gc);
  put(j, "tlw_sr", report.tlw_sr);
  put(j, "tlw_gc", report.tlw_gc);
  put(j, "rouge1", report.rouge1);
  put(j, "rouge2", report.rouge2);
  put(j, "rougeL", report.rougeL);
  put(j, "f1", report.f1);
  return j;
}

MetricsReport report_from_json(const Json& j) {
  MetricsReport r;
  try {
    r.split = require(j, "split", "").get<std::string>();
    r.model = require(j, "model", "").get<std::string>();
    r.instances = require(j, "instances", "").get<std::size_t>();
    r.sr = get(j, "sr");
    r.gc = get(j, "gc");
    r.tlw_sr = get(j, "tlw_sr");
    r.tlw_gc = get(j, "tlw_gc");
    r.rouge1 = get(j, "rouge1");
    r.rouge2 = get(j, "rouge2");
    r.rougeL = get(j, "rougeL");
    r.f1 = get(j, "f1");
  } catch (const Json::exception& e) {
    throw SchemaError("", e.what());
  }
  return r;
}

std::string format_table(const std::vector<MetricsReport>& reports) {
  std::size_t name_width = 5;
  for (const auto& r : reports) name_width = std::max(name_width, r.model.size());
  const int w = static_cast<int>(name_width);
  std::string out;
  char line[256];
  auto cell = [](const std::optional<double>& v) { return v ? percent(*v) : std::string("-"); };

  bool any_actions = false, any_plans = false, any_f1 = false;
  for (const auto& r : reports) {
    any_actions |= r.sr.has_value();
    any_plans |= r.rouge1.has_value();
    any_f1 |= r.f1.has_value();
  }
  if (any_actions) {
    std::snprintf(line, sizeof line, "%-*s  %-7s  %-16s  %-16s\n", w, "Model", "Split", "SR [TLW]", "GC [TLW]");
    out += line;
    for (const auto& r : reports) {
      if (!r.sr) continue;
      const std::string sr = cell(r.sr) + " [" + cell(r.tlw_sr) + "]";
      const std::string gc = cell(r.gc) + " [" + cell(r.tlw_gc) + "]";
      std::snprintf(line, sizeof line, "%-*s  %-7s  %-16s  %-16s\n", w, r.model.c_str(), r.split.c_str(), sr.c_str(),
                    gc.c_str());
      out += line;
    }
  }
  if (any_plans) {
    if (!out.empty()) out += "\n";
    std::snprintf(line, sizeof line, "%-*s  %-7s  %6s  %6s  %6s\n", w, "Model", "Split", "R-1", "R-2", "R-L");
    out += line;
    for (const auto& r : reports) {
      if (!r.rouge1) continue;
      std::snprintf(line, sizeof line, "%-*s  %-7s  %6s  %6s  %6s\n", w, r.model.c_str(), r.split.c_str(),
                    cell(r.rouge1).c_str(), cell(r.rouge2).c_str(), cell(r.rougeL).c_str());
      out += line;
    }
  }
  if (any_f1) {
    if (!out.empty()) out += "\n";
    std::snprintf(line, sizeof line, "%-*s  %-7s  %6s\n", w, "Model", "Split", "F1");
    out += line;
    for (const auto& r : reports) {
      if (!r.f1) continue;
      char f1[32];
      std::snprintf(f1, sizeof f1, "%.4f", *r.f1);
      std::snprintf(line, sizeof line, "%-*s  %-7s  %6s\n", w, r.model.c_str(), r.split.c_str(), f1);
      out += line;
    }
  }
  return out;
}

}  // namespace edh::metrics
