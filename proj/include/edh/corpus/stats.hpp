#pragma once

#include <string>
#include <vector>

#include "edh/corpus/session.hpp"

namespace edh::corpus {

// Per-task session statistics: count, and mean / sample standard deviation
// of Follower actions and of interaction actions per session.
struct TaskStats {
  std::string task;
  int sessions = 0;
  double mean_actions = 0.0;
  double std_actions = 0.0;
  double mean_interactions = 0.0;
  double std_interactions = 0.0;
};

// Sorted by task name.
std::vector<TaskStats> task_stats(const std::vector<GameplaySession>& sessions);

std::string format_task_stats(const std::vector<TaskStats>& stats);
Json to_json(const std::vector<TaskStats>& stats);

// Navigation share over all Follower navigation+interaction actions.
double navigation_share(const std::vector<GameplaySession>& sessions);

}  // namespace edh::corpus
