#pragma once

#include <optional>
#include <string>
#include <string_view>
#include <unordered_map>
#include <vector>

#include "actions.hpp"
#include "rng.hpp"
#include "tensor.hpp"

namespace domq {

enum class VocabKind { tag, text, cls };

inline int default_capacity(VocabKind k) {
  switch (k) {
    case VocabKind::tag: return 80;
    case VocabKind::text: return 400;
    case VocabKind::cls: return 80;
  }
  return 0;
}

// Token table with index 0 reserved for the absent attribute. Growth
// stops at capacity; past that, lookup falls back to a deterministic
// hash bucket so an index always exists.
class Vocab {
 public:
  Vocab(VocabKind kind, int capacity) : kind_(kind), capacity_(capacity) {}
  explicit Vocab(VocabKind kind) : Vocab(kind, default_capacity(kind)) {}

  VocabKind kind() const { return kind_; }
  int capacity() const { return capacity_; }
  int size() const { return next_free_; }

  // inserting lookup; "" maps to 0, a full table buckets into [1, capacity)
  int lookup(std::string_view token);

  // inserting lookup that reports out-of-vocabulary instead of bucketing;
  // the caller substitutes a frozen random vector for nullopt
  std::optional<int> lookup_or_oov(std::string_view token);

  std::optional<int> find(std::string_view token) const;

  // tokens in index order starting at index 1 (for serialization)
  std::vector<std::string> tokens_in_order() const;
  void restore(const std::vector<std::string>& tokens);

 private:
  int insert(std::string_view token);
  VocabKind kind_;
  int capacity_;
  int next_free_ = 1;
  std::unordered_map<std::string, int> table_;
};

// Frozen unit-norm vector for tokens that fall outside a full vocabulary;
// deterministic per (token, run_seed).
std::vector<double> oov_vector(std::string_view token, int dim, std::uint64_t run_seed);

// Learnable token embeddings over a vocabulary. Row 0 is the zero vector
// and never receives gradient (enforced by the embed op).
struct EmbeddingMatrix {
  Vocab vocab;
  Parameter table;
  int dim = 0;

  EmbeddingMatrix(const std::string& name, VocabKind kind, int capacity, int d)
      : vocab(kind, capacity), table(name, capacity, d), dim(d) {}

  void init(Rng& rng);
};

struct GoalEmbedding {
  Val tokens;             // |G| x dim, learnable rows (OOV rows frozen)
  Val positions;          // |G| x kMaxGoalTokens one-hot, constant
  std::vector<int> ids;   // vocab index per token, -1 for OOV
};

// Token rows plus one-hot positions for a goal sentence. Throws
// GoalTooLong past the cap.
GoalEmbedding embed_goal(Tape& tape, EmbeddingMatrix& text, const Goal& goal,
                         std::uint64_t run_seed);

}  // namespace domq
