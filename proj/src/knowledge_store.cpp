#include "cellsel/knowledge_store.hpp"

namespace cellsel {

void KnowledgeStore::add(std::span<const DecisionRecord> records) {
  records_.insert(records_.end(), records.begin(), records.end());
}

void KnowledgeStore::prune(int now) {
  const int oldest = now - window_ + 1;
  while (!records_.empty() && records_.front().interval < oldest) records_.pop_front();
}

std::vector<lvq::LabeledSample> KnowledgeStore::samples() const {
  std::vector<lvq::LabeledSample> out;
  out.reserve(records_.size());
  for (const DecisionRecord& r : records_) out.push_back(r.sample());
  return out;
}

}  // namespace cellsel
