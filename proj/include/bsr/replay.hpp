#pragma once

#include <deque>
#include <vector>

#include "bsr/rng.hpp"
#include "bsr/sr.hpp"
#include "bsr/types.hpp"

namespace bsr::replay {

// Fixed-capacity ring of transitions for one context; oldest evicted first.
class ContextBuffer {
 public:
  ContextBuffer(int context, int capacity)
      : context_(context), capacity_(capacity) {}

  void push(const Transition& t) {
    if (t.context != context_)
      throw std::logic_error("ContextBuffer: transition stored in wrong context buffer");
    if (static_cast<int>(items_.size()) < capacity_) {
      items_.push_back(t);
    } else {
      items_[cursor_] = t;
      cursor_ = (cursor_ + 1) % capacity_;
    }
  }

  // min(n, size) draws, uniform with replacement
  std::vector<Transition> sample_minibatch(int n, Rng& rng) const {
    const int size = static_cast<int>(items_.size());
    const int draws = std::min(n, size);
    std::vector<Transition> out;
    out.reserve(draws);
    for (int i = 0; i < draws; ++i) out.push_back(items_[rng.below(size)]);
    return out;
  }

  int size() const { return static_cast<int>(items_.size()); }
  int capacity() const { return capacity_; }
  int context() const { return context_; }
  void clear() {
    items_.clear();
    cursor_ = 0;
  }
  const Transition& oldest() const { return items_[cursor_ % items_.size()]; }
  const Transition& at_insertion_order(int i) const {
    return items_[(cursor_ + i) % items_.size()];
  }

 private:
  int context_;
  int capacity_;
  int cursor_ = 0;
  std::vector<Transition> items_;
};

// Episode-windowed memory (neural runs): entries from episodes older than the
// horizon are evicted, so the cap is common to all contexts by construction.
template <typename Entry>
class EpisodeBuffer {
 public:
  explicit EpisodeBuffer(int episode_horizon) : horizon_(episode_horizon) {}

  void push(long episode, Entry e) { items_.push_back({episode, std::move(e)}); }
  void evict_before(long episode_floor) {
    while (!items_.empty() && items_.front().episode < episode_floor) items_.pop_front();
  }
  std::vector<const Entry*> sample_minibatch(int n, Rng& rng) const {
    const int size = static_cast<int>(items_.size());
    const int draws = std::min(n, size);
    std::vector<const Entry*> out;
    out.reserve(draws);
    for (int i = 0; i < draws; ++i) out.push_back(&items_[rng.below(size)].entry);
    return out;
  }
  void begin_episode(long episode) { evict_before(episode - horizon_ + 1); }
  int size() const { return static_cast<int>(items_.size()); }
  void clear() { items_.clear(); }

 private:
  struct Tagged {
    long episode;
    Entry entry;
  };
  int horizon_;
  std::deque<Tagged> items_;
};

// Minibatch TD replay: full Bellman backup per transition regardless of
// terminality, same divisor as the direct update.
inline void replay_update(sr::SuccessorMap& m, const std::vector<Transition>& minibatch,
                          const Vec& w, double gamma, double alpha_sr, int divisor) {
  for (const Transition& t : minibatch) sr::td_update(m, t, w, gamma, alpha_sr, divisor);
}

}  // namespace bsr::replay
