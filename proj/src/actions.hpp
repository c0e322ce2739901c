#pragma once

#include <string>
#include <vector>

#include "dom.hpp"

namespace domq {

inline constexpr int kMaxGoalTokens = 18;

// Tokenized instruction sentence. Token j sits at position j.
struct Goal {
  std::vector<std::string> tokens;

  int size() const { return static_cast<int>(tokens.size()); }
  std::string sentence() const {
    std::string s;
    for (std::size_t i = 0; i < tokens.size(); ++i) {
      if (i) s += ' ';
      s += tokens[i];
    }
    return s;
  }
  bool operator==(const Goal&) const = default;
};

enum class Mode : int { click = 0, type = 1 };

// Composite action: which element, which goal token, click or type. The
// token index is ignored by the environment when mode == click.
struct ActionTuple {
  int dom = 0;
  int token = 0;
  Mode mode = Mode::click;

  bool operator==(const ActionTuple&) const = default;
};

struct StepResult {
  DomTree next_state;
  double reward = 0.0;
  bool done = false;
};

}  // namespace domq
