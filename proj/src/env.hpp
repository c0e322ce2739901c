#pragma once

#include <cstdint>
#include <memory>
#include <string>
#include <utility>
#include <vector>

#include "actions.hpp"
#include "dom.hpp"

namespace domq {

struct TaskInfo {
  std::string name;
  std::string difficulty;  // "easy" | "medium" | "hard"
  long long budget = 0;    // training frame budget for this difficulty
  int max_episode_steps = 0;
  int msg_steps = 3;  // message-passing depth the task is tuned for
};

// A goal-conditioned page-interaction task. sample() is a deterministic
// function of the seed; transition() is a pure function of
// (state, goal, action) — multi-page tasks derive fresh page content from
// the goal so no hidden episode state exists.
class Task {
 public:
  virtual ~Task() = default;
  const TaskInfo& info() const { return info_; }

  virtual std::pair<DomTree, Goal> sample(std::uint64_t seed) const = 0;
  virtual StepResult transition(const DomTree& state, const Goal& goal,
                                const ActionTuple& action) const = 0;
  // scripted solution policy; solves any reachable state within the
  // episode cap
  virtual ActionTuple oracle_action(const DomTree& state, const Goal& goal) const = 0;

 protected:
  TaskInfo info_;
};

// Owns one episode at a time: current page, goal, step budget.
class Env {
 public:
  Env(std::shared_ptr<const Task> task, std::uint64_t seed);

  const DomTree& state() const { return state_; }
  const Goal& goal() const { return goal_; }
  const Task& task() const { return *task_; }
  bool done() const { return done_; }
  int steps_taken() const { return steps_; }

  std::pair<DomTree, Goal> reset(std::uint64_t seed);
  StepResult step(const ActionTuple& action);

 private:
  std::shared_ptr<const Task> task_;
  DomTree state_;
  Goal goal_;
  int steps_ = 0;
  bool done_ = false;
};

// Built-in task names, in registry order.
inline constexpr const char* kClickButton = "click-button-analog";
inline constexpr const char* kClickLink = "click-link-analog";
inline constexpr const char* kNavigateTree = "navigate-tree-analog";
inline constexpr const char* kClickCheckboxes = "click-checkboxes-analog";
inline constexpr const char* kEnterText = "enter-text-analog";
inline constexpr const char* kLoginUser = "login-user-analog";
inline constexpr const char* kSearchEngine = "search-engine-analog";

// Descriptors for the built-in tasks plus any registered custom tasks.
std::vector<TaskInfo> registry();
std::shared_ptr<const Task> make_task(const std::string& name);

// Word pool the built-in goal templates draw their free tokens from.
const std::vector<std::string>& task_lexicon();

// Custom single-page tasks described by a JSON task-spec document.
std::shared_ptr<const Task> load_task_json(const std::string& json_text);
void register_task_file(const std::string& path);
void register_task(std::shared_ptr<const Task> task);

// --- shared interaction semantics used by the task implementations ---

// exclusive focus on the clicked node
DomTree with_focus(DomTree t, int node);
// checkbox toggle: flips tampered (the checked analog) and focuses
DomTree with_toggle(DomTree t, int node);
// typing: replaces the node's text with one goal token, sets tampered
DomTree with_typed(DomTree t, int node, const std::string& token);

}  // namespace domq
