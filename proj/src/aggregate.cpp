#include "arena/aggregate.hpp"

#include <algorithm>
#include <map>
#include <string>

namespace arena {

BattleAggregate::BattleAggregate(std::vector<ModelId> models) {
  std::sort(models.begin(), models.end());
  models.erase(std::unique(models.begin(), models.end()), models.end());
  for (const auto& m : models) ensure_model(m);
}

std::optional<std::size_t> BattleAggregate::index_of(const ModelId& model) const {
  auto it = std::lower_bound(models_.begin(), models_.end(), model);
  if (it == models_.end() || *it != model) return std::nullopt;
  return static_cast<std::size_t>(it - models_.begin());
}

std::size_t BattleAggregate::ensure_model(const ModelId& model) {
  if (auto idx = index_of(model)) return *idx;

  auto it = std::lower_bound(models_.begin(), models_.end(), model);
  const auto pos = static_cast<std::size_t>(it - models_.begin());
  const std::size_t old_n = models_.size();
  models_.insert(it, model);
  const std::size_t n = models_.size();

  auto remap = [&](const SquareMatrix<std::int64_t>& old) {
    SquareMatrix<std::int64_t> grown(n);
    for (std::size_t i = 0; i < old_n; ++i) {
      for (std::size_t j = 0; j < old_n; ++j) {
        grown(i < pos ? i : i + 1, j < pos ? j : j + 1) = old(i, j);
      }
    }
    return grown;
  };
  wins_ = remap(wins_);
  draws_good_ = remap(draws_good_);
  draws_bad_ = remap(draws_bad_);
  self_play_total_.insert(self_play_total_.begin() + static_cast<std::ptrdiff_t>(pos), 0);
  self_play_draws_.insert(self_play_draws_.begin() + static_cast<std::ptrdiff_t>(pos), 0);
  side_votes_.insert(side_votes_.begin() + static_cast<std::ptrdiff_t>(pos), std::vector<SideVote>{});
  return pos;
}

void BattleAggregate::add_vote(const VoteRecord& vote) {
  if (vote.round_count < 1) {
    throw IntegrityError("session " + vote.session_id + ": round_count must be >= 1");
  }
  if (vote.is_self_play()) {
    const std::size_t i = ensure_model(vote.model_a);
    ++self_play_total_[i];
    if (is_draw(vote.outcome)) ++self_play_draws_[i];
    self_play_votes_.push_back(vote);
    return;
  }

  ensure_model(vote.model_a);
  ensure_model(vote.model_b);
  // Indices can shift while inserting, so look both up afterwards.
  const std::size_t a = *index_of(vote.model_a);
  const std::size_t b = *index_of(vote.model_b);
  switch (vote.outcome) {
    case VoteOutcome::WinA:
      ++wins_(a, b);
      break;
    case VoteOutcome::WinB:
      ++wins_(b, a);
      break;
    case VoteOutcome::DrawGood:
      ++draws_good_(a, b);
      ++draws_good_(b, a);
      break;
    case VoteOutcome::DrawBad:
      ++draws_bad_(a, b);
      ++draws_bad_(b, a);
      break;
  }
  side_votes_[a].push_back({vote.outcome, Side::A, vote.round_count});
  side_votes_[b].push_back({vote.outcome, Side::B, vote.round_count});
  competitive_votes_.push_back(vote);
}

std::int64_t BattleAggregate::battles(std::size_t i, std::size_t j) const {
  if (i == j) return 0;
  return wins_(i, j) + wins_(j, i) + draws(i, j);
}

std::int64_t BattleAggregate::competitive_battles(std::size_t i) const {
  std::int64_t total = 0;
  for (std::size_t j = 0; j < size(); ++j) total += battles(i, j);
  return total;
}

std::int64_t BattleAggregate::total_wins(std::size_t i) const {
  std::int64_t total = 0;
  for (std::size_t j = 0; j < size(); ++j) total += wins_(i, j);
  return total;
}

std::int64_t BattleAggregate::total_draws(std::size_t i) const {
  std::int64_t total = 0;
  for (std::size_t j = 0; j < size(); ++j) {
    if (j != i) total += draws(i, j);
  }
  return total;
}

BattleAggregate BattleAggregate::competitive_subset() const {
  BattleAggregate subset;
  std::vector<std::size_t> kept;
  for (std::size_t i = 0; i < size(); ++i) {
    if (competitive_battles(i) > 0) kept.push_back(i);
  }
  if (kept.size() == size()) return *this;

  for (std::size_t i : kept) subset.ensure_model(models_[i]);
  for (const auto& vote : competitive_votes_) subset.add_vote(vote);
  for (const auto& vote : self_play_votes_) {
    if (subset.index_of(vote.model_a)) subset.add_vote(vote);
  }
  return subset;
}

std::vector<VoteRecord> effective_votes(std::span<const BattleEvent> events) {
  struct SessionVote {
    VotePayload latest;
    Timestamp cast_timestamp{};
    std::int64_t cast_seq = 0;
  };
  std::map<std::string, SessionVote> votes;
  std::map<std::string, std::pair<ModelId, ModelId>> created_pairs;
  std::map<std::string, bool> invalid;

  std::optional<std::int64_t> last_seq;
  for (const BattleEvent& event : events) {
    if (last_seq && event.seq <= *last_seq) {
      throw IntegrityError("event seq " + std::to_string(event.seq) +
                           " is not greater than previous seq " + std::to_string(*last_seq));
    }
    last_seq = event.seq;

    switch (event.type) {
      case EventType::SessionCreated: {
        const auto& p = std::get<SessionCreatedPayload>(event.payload);
        created_pairs[p.session_id] = {p.model_a, p.model_b};
        break;
      }
      case EventType::RoundCompleted: {
        const auto& p = std::get<RoundCompletedPayload>(event.payload);
        if (!p.se_relevant) invalid[p.session_id] = true;
        break;
      }
      case EventType::VoteCast:
      case EventType::VoteRevised: {
        const auto& p = std::get<VotePayload>(event.payload);
        if (auto it = created_pairs.find(p.session_id);
            it != created_pairs.end() &&
            (it->second.first != p.model_a || it->second.second != p.model_b)) {
          throw IntegrityError("event seq " + std::to_string(event.seq) +
                               ": vote model pair differs from session " + p.session_id);
        }
        auto it = votes.find(p.session_id);
        if (event.type == EventType::VoteCast) {
          if (it != votes.end()) {
            throw IntegrityError("event seq " + std::to_string(event.seq) +
                                 ": second vote_cast for session " + p.session_id);
          }
          votes.emplace(p.session_id, SessionVote{p, event.timestamp, event.seq});
          break;
        }
        if (it == votes.end()) {
          throw IntegrityError("event seq " + std::to_string(event.seq) +
                               ": vote_revised without prior vote_cast for session " +
                               p.session_id);
        }
        if (p.revision <= it->second.latest.revision) {
          throw IntegrityError("event seq " + std::to_string(event.seq) + ": revision " +
                               std::to_string(p.revision) + " does not exceed revision " +
                               std::to_string(it->second.latest.revision));
        }
        if (p.model_a != it->second.latest.model_a || p.model_b != it->second.latest.model_b) {
          throw IntegrityError("event seq " + std::to_string(event.seq) +
                               ": revision changes the model pair of session " + p.session_id);
        }
        it->second.latest = p;
        break;
      }
    }
  }

  std::vector<VoteRecord> result;
  result.reserve(votes.size());
  for (const auto& [session_id, vote] : votes) {
    if (invalid.count(session_id)) continue;
    VoteRecord record;
    record.session_id = session_id;
    record.model_a = vote.latest.model_a;
    record.model_b = vote.latest.model_b;
    record.outcome = vote.latest.outcome;
    record.round_count = vote.latest.round_count;
    record.revision = vote.latest.revision;
    record.timestamp = vote.cast_timestamp;
    record.seq = vote.cast_seq;
    result.push_back(std::move(record));
  }
  std::sort(result.begin(), result.end(), [](const VoteRecord& l, const VoteRecord& r) {
    return std::tie(l.timestamp, l.seq) < std::tie(r.timestamp, r.seq);
  });
  return result;
}

BattleAggregate replay_log(std::span<const BattleEvent> events) {
  BattleAggregate aggregate;
  for (const auto& vote : effective_votes(events)) aggregate.add_vote(vote);
  return aggregate;
}

}  // namespace arena
