#pragma once

#include <cstddef>
#include <deque>
#include <span>
#include <vector>

#include "cellsel/lvq.hpp"

namespace cellsel {

enum class LabelSource { Optimizer, Gsa };

// One labeled user decision together with the raw features of every
// candidate cell, so training can be replayed offline.
struct DecisionRecord {
  int interval = 0;
  int user = 0;
  int chosen = 0;
  LabelSource source = LabelSource::Optimizer;
  std::vector<lvq::FeatureVector> candidates;  // indexed by cell

  lvq::LabeledSample sample() const {
    return {candidates.at(static_cast<std::size_t>(chosen)), chosen, interval, user};
  }
};

// In-memory knowledge base, pruned to a sliding window of intervals.
class KnowledgeStore {
 public:
  explicit KnowledgeStore(int window_intervals = 100) : window_(window_intervals) {}

  void add(std::span<const DecisionRecord> records);
  // Drops every record older than `now - window + 1`.
  void prune(int now);

  std::vector<lvq::LabeledSample> samples() const;
  const std::deque<DecisionRecord>& records() const { return records_; }
  std::size_t size() const { return records_.size(); }

 private:
  int window_;
  std::deque<DecisionRecord> records_;
};

}  // namespace cellsel
