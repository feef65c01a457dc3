#include "arena/types.hpp"

namespace arena {

ParseError::ParseError(std::optional<std::int64_t> seq, const std::string& what)
    : ArenaError(seq ? "event seq " + std::to_string(*seq) + ": " + what : what), seq_(seq) {}

std::string_view to_string(VoteOutcome outcome) {
  switch (outcome) {
    case VoteOutcome::WinA:
      return "win_a";
    case VoteOutcome::WinB:
      return "win_b";
    case VoteOutcome::DrawGood:
      return "draw_good";
    case VoteOutcome::DrawBad:
      return "draw_bad";
  }
  return "unknown";
}

VoteOutcome parse_vote_outcome(std::string_view text) {
  if (text == "win_a") return VoteOutcome::WinA;
  if (text == "win_b") return VoteOutcome::WinB;
  if (text == "draw_good") return VoteOutcome::DrawGood;
  if (text == "draw_bad") return VoteOutcome::DrawBad;
  throw std::invalid_argument("unknown vote outcome '" + std::string(text) + "'");
}

std::string_view to_string(Side side) { return side == Side::A ? "a" : "b"; }

std::string_view to_string(RoundStatus status) {
  switch (status) {
    case RoundStatus::Ok:
      return "OK";
    case RoundStatus::Timeout:
      return "TIMEOUT";
    case RoundStatus::Error:
      return "ERROR";
  }
  return "unknown";
}

RoundStatus parse_round_status(std::string_view text) {
  if (text == "OK") return RoundStatus::Ok;
  if (text == "TIMEOUT") return RoundStatus::Timeout;
  if (text == "ERROR") return RoundStatus::Error;
  throw std::invalid_argument("unknown round status '" + std::string(text) + "'");
}

double outcome_score(VoteOutcome outcome, Side side, double draw_magnitude) {
  switch (outcome) {
    case VoteOutcome::WinA:
      return side == Side::A ? 1.0 : -1.0;
    case VoteOutcome::WinB:
      return side == Side::B ? 1.0 : -1.0;
    case VoteOutcome::DrawGood:
      return draw_magnitude;
    case VoteOutcome::DrawBad:
      return -draw_magnitude;
  }
  return 0.0;
}

double binary_score(VoteOutcome outcome, Side side) {
  if (is_draw(outcome)) return 0.5;
  const bool a_won = outcome == VoteOutcome::WinA;
  return (a_won == (side == Side::A)) ? 1.0 : 0.0;
}

}  // namespace arena
