#include "vocab.hpp"

#include <cmath>

#include "error.hpp"

namespace domq {

int Vocab::insert(std::string_view token) {
  int idx = next_free_++;
  table_.emplace(std::string(token), idx);
  return idx;
}

int Vocab::lookup(std::string_view token) {
  if (token.empty()) return 0;
  auto it = table_.find(std::string(token));
  if (it != table_.end()) return it->second;
  if (next_free_ < capacity_) return insert(token);
  // stable bucket for overflow tokens
  return 1 + static_cast<int>(fnv1a(token) % static_cast<std::uint64_t>(capacity_ - 1));
}

std::optional<int> Vocab::lookup_or_oov(std::string_view token) {
  if (token.empty()) return 0;
  auto it = table_.find(std::string(token));
  if (it != table_.end()) return it->second;
  if (next_free_ < capacity_) return insert(token);
  return std::nullopt;
}

std::optional<int> Vocab::find(std::string_view token) const {
  auto it = table_.find(std::string(token));
  if (it == table_.end()) return std::nullopt;
  return it->second;
}

std::vector<std::string> Vocab::tokens_in_order() const {
  std::vector<std::string> out(static_cast<std::size_t>(next_free_ > 0 ? next_free_ - 1 : 0));
  for (const auto& [tok, idx] : table_) out[idx - 1] = tok;
  return out;
}

void Vocab::restore(const std::vector<std::string>& tokens) {
  table_.clear();
  next_free_ = 1;
  for (const auto& t : tokens) insert(t);
}

std::vector<double> oov_vector(std::string_view token, int dim, std::uint64_t run_seed) {
  Rng rng(hash_mix(fnv1a(token), hash_mix(run_seed, 0x00756e6974ULL)));
  std::vector<double> v(dim);
  double norm2 = 0;
  do {
    norm2 = 0;
    for (double& x : v) {
      x = rng.next_normal();
      norm2 += x * x;
    }
  } while (norm2 == 0.0);
  double inv = 1.0 / std::sqrt(norm2);
  for (double& x : v) x *= inv;
  return v;
}

void EmbeddingMatrix::init(Rng& rng) {
  double s = 1.0 / std::sqrt(static_cast<double>(dim));
  table.value.zero();
  for (int r = 1; r < table.value.rows; ++r)
    for (int c = 0; c < dim; ++c) table.value.at(r, c) = rng.next_normal() * s;
}

GoalEmbedding embed_goal(Tape& tape, EmbeddingMatrix& text, const Goal& goal,
                         std::uint64_t run_seed) {
  const int n = goal.size();
  if (n < 1) throw Error(ErrorCode::invalid_argument, "empty goal");
  if (n > kMaxGoalTokens) throw GoalTooLong(n, kMaxGoalTokens);

  GoalEmbedding out;
  out.ids.resize(n);
  Tensor fallback(n, text.dim);
  bool any_oov = false;
  for (int j = 0; j < n; ++j) {
    auto idx = text.vocab.lookup_or_oov(goal.tokens[j]);
    if (idx) {
      out.ids[j] = *idx;
    } else {
      out.ids[j] = -1;
      any_oov = true;
      auto v = oov_vector(goal.tokens[j], text.dim, run_seed);
      for (int c = 0; c < text.dim; ++c) fallback.at(j, c) = v[c];
    }
  }
  out.tokens = embed(tape, text.table, out.ids, any_oov ? &fallback : nullptr);

  Tensor pos(n, kMaxGoalTokens);
  for (int j = 0; j < n; ++j) pos.at(j, j) = 1.0;
  out.positions = tape.constant(std::move(pos));
  return out;
}

}  // namespace domq
