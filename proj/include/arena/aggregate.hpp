#pragma once

#include <cstdint>
#include <optional>
#include <span>
#include <vector>

#include "arena/event_log.hpp"
#include "arena/types.hpp"

namespace arena {

template <typename T>
class SquareMatrix {
 public:
  SquareMatrix() = default;
  explicit SquareMatrix(std::size_t n, T fill = T{}) : n_(n), data_(n * n, fill) {}

  std::size_t size() const { return n_; }
  T& operator()(std::size_t i, std::size_t j) { return data_[i * n_ + j]; }
  const T& operator()(std::size_t i, std::size_t j) const { return data_[i * n_ + j]; }

  bool operator==(const SquareMatrix&) const = default;

 private:
  std::size_t n_ = 0;
  std::vector<T> data_;
};

// One model's view of a competitive vote.
struct SideVote {
  VoteOutcome outcome = VoteOutcome::DrawGood;
  Side side = Side::A;
  std::int64_t round_count = 1;

  double score(double draw_magnitude = kDefaultDrawMagnitude) const {
    return outcome_score(outcome, side, draw_magnitude);
  }
  bool operator==(const SideVote&) const = default;
};

// Count state derived from the event log. Models are kept sorted by id;
// competitive matrices never include self-play votes.
class BattleAggregate {
 public:
  BattleAggregate() = default;
  explicit BattleAggregate(std::vector<ModelId> models);

  const std::vector<ModelId>& models() const { return models_; }
  std::size_t size() const { return models_.size(); }
  std::optional<std::size_t> index_of(const ModelId& model) const;

  // Applies one effective vote. Unknown models are inserted. Competitive
  // votes must be added in chronological order.
  void add_vote(const VoteRecord& vote);

  std::int64_t wins(std::size_t i, std::size_t j) const { return wins_(i, j); }
  std::int64_t draws_good(std::size_t i, std::size_t j) const { return draws_good_(i, j); }
  std::int64_t draws_bad(std::size_t i, std::size_t j) const { return draws_bad_(i, j); }
  std::int64_t draws(std::size_t i, std::size_t j) const {
    return draws_good_(i, j) + draws_bad_(i, j);
  }
  // Total competitive battles between i and j.
  std::int64_t battles(std::size_t i, std::size_t j) const;
  std::int64_t competitive_battles(std::size_t i) const;
  std::int64_t total_wins(std::size_t i) const;
  std::int64_t total_draws(std::size_t i) const;

  std::int64_t self_play_total(std::size_t i) const { return self_play_total_[i]; }
  std::int64_t self_play_draws(std::size_t i) const { return self_play_draws_[i]; }

  const std::vector<SideVote>& side_votes(std::size_t i) const { return side_votes_[i]; }
  // Effective competitive votes in chronological order.
  const std::vector<VoteRecord>& competitive_votes() const { return competitive_votes_; }
  const std::vector<VoteRecord>& self_play_votes() const { return self_play_votes_; }

  std::int64_t competitive_vote_count() const {
    return static_cast<std::int64_t>(competitive_votes_.size());
  }

  // Sub-aggregate over the models with at least one competitive battle.
  BattleAggregate competitive_subset() const;

  bool operator==(const BattleAggregate&) const = default;

 private:
  std::size_t ensure_model(const ModelId& model);

  std::vector<ModelId> models_;
  SquareMatrix<std::int64_t> wins_;
  SquareMatrix<std::int64_t> draws_good_;
  SquareMatrix<std::int64_t> draws_bad_;
  std::vector<std::int64_t> self_play_total_;
  std::vector<std::int64_t> self_play_draws_;
  std::vector<std::vector<SideVote>> side_votes_;
  std::vector<VoteRecord> competitive_votes_;
  std::vector<VoteRecord> self_play_votes_;
};

// Effective vote per session (highest revision), placed at the position of
// the session's original vote_cast. Sessions with any round marked
// se_relevant=false are dropped.
std::vector<VoteRecord> effective_votes(std::span<const BattleEvent> events);

// Throws IntegrityError on seq regressions, revisions without a prior
// vote, duplicate casts or model-pair changes within a session.
BattleAggregate replay_log(std::span<const BattleEvent> events);

}  // namespace arena
