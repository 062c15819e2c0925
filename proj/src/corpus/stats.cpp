#include "edh/corpus/stats.hpp"

#include <cmath>
#include <cstdio>
#include <map>

namespace edh::corpus {

namespace {

std::pair<double, double> mean_and_sample_std(const std::vector<double>& xs) {
  double mean = 0.0;
  for (double x : xs) mean += x;
  mean /= static_cast<double>(xs.size());
  if (xs.size() < 2) return {mean, 0.0};
  double ss = 0.0;
  for (double x : xs) ss += (x - mean) * (x - mean);
  return {mean, std::sqrt(ss / static_cast<double>(xs.size() - 1))};
}

}  // namespace

std::vector<TaskStats> task_stats(const std::vector<GameplaySession>& sessions) {
  std::map<std::string, std::pair<std::vector<double>, std::vector<double>>> by_task;
  for (const auto& s : sessions) {
    const auto acts = physical_actions(s);
    double interactions = 0.0;
    for (const auto& a : acts) interactions += worldsim::is_interaction(a) ? 1.0 : 0.0;
    auto& [total, inter] = by_task[s.task.name];
    total.push_back(static_cast<double>(acts.size()));
    inter.push_back(interactions);
  }
  std::vector<TaskStats> out;
  for (const auto& [task, v] : by_task) {
    TaskStats t;
    t.task = task;
    t.sessions = static_cast<int>(v.first.size());
    std::tie(t.mean_actions, t.std_actions) = mean_and_sample_std(v.first);
    std::tie(t.mean_interactions, t.std_interactions) = mean_and_sample_std(v.second);
    out.push_back(t);
  }
  return out;
}

std::string format_task_stats(const std::vector<TaskStats>& stats) {
  std::string out;
  char line[160];
  std::snprintf(line, sizeof line, "%-16s %9s  %-20s  %-20s\n", "Task", "Sessions", "Actions", "Interactions");
  out += line;
  for (const auto& t : stats) {
    char actions[32];
    char inter[32];
    std::snprintf(actions, sizeof actions, "%.2f +- %.2f", t.mean_actions, t.std_actions);
    std::snprintf(inter, sizeof inter, "%.2f +- %.2f", t.mean_interactions, t.std_interactions);
    std::snprintf(line, sizeof line, "%-16s %9d  %-20s  %-20s\n", t.task.c_str(), t.sessions, actions, inter);
    out += line;
  }
  return out;
}

Json to_json(const std::vector<TaskStats>& stats) {
  Json j = Json::array();
  for (const auto& t : stats) {
    j.push_back(Json{{"task", t.task},
                     {"sessions", t.sessions},
                     {"mean_actions", t.mean_actions},
                     {"std_actions", t.std_actions},
                     {"mean_interactions", t.mean_interactions},
                     {"std_interactions", t.std_interactions}});
  }
  return j;
}

double navigation_share(const std::vector<GameplaySession>& sessions) {
  double nav = 0.0;
  double total = 0.0;
  for (const auto& s : sessions) {
    for (const auto& a : physical_actions(s)) {
      total += 1.0;
      if (worldsim::is_navigation(a)) nav += 1.0;
    }
  }
  return total > 0.0 ? nav / total : 0.0;
}

}  // namespace edh::corpus
