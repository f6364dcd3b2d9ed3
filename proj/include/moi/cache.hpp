// Copyright 2026 The moi Authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//      http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#ifndef MOI_CACHE_HPP_
#define MOI_CACHE_HPP_

#include <cstddef>
#include <cstdint>
#include <exception>
#include <future>
#include <list>
#include <memory>
#include <mutex>
#include <optional>
#include <span>
#include <string>
#include <unordered_map>
#include <utility>
#include <vector>

#include "moi/coalition.hpp"
#include "moi/error.hpp"
#include "moi/game.hpp"

namespace moi {

inline constexpr std::size_t kDefaultCacheBudget = std::size_t{1} << 22;

/// Thread-safe LRU map from (evaluator, coalition) to score.
///
/// Evaluators are identified by their descriptor string, interned to a
/// small integer so keys stay cheap to hash.
class EvalCache {
 public:
  explicit EvalCache(std::size_t budget = kDefaultCacheBudget) : budget_(budget) {
    if (budget_ == 0) fail(ErrorCode::kInvalidArgument, "cache budget must be positive");
  }

  EvalCache(const EvalCache&) = delete;
  EvalCache& operator=(const EvalCache&) = delete;

  std::uint32_t intern(const std::string& descriptor) {
    std::lock_guard lock(mu_);
    auto [it, inserted] =
        owners_.try_emplace(descriptor, static_cast<std::uint32_t>(owners_.size()));
    return it->second;
  }

  std::optional<double> lookup(std::uint32_t owner, const Coalition& s) {
    std::lock_guard lock(mu_);
    return lookup_locked(owner, s);
  }

  void insert(std::uint32_t owner, const Coalition& s, double value) {
    std::lock_guard lock(mu_);
    insert_locked(owner, s, value);
  }

  std::size_t size() const {
    std::lock_guard lock(mu_);
    return index_.size();
  }

  std::size_t budget() const { return budget_; }

  std::uint64_t evictions() const {
    std::lock_guard lock(mu_);
    return evictions_;
  }

 private:
  friend class CachedGame;

  struct Key {
    std::uint32_t owner;
    Coalition coalition;
    friend bool operator==(const Key&, const Key&) = default;
  };
  struct KeyHash {
    std::size_t operator()(const Key& k) const {
      return static_cast<std::size_t>(hash_combine(k.owner, k.coalition.hash()));
    }
  };
  using Entry = std::pair<Key, double>;

  std::optional<double> lookup_locked(std::uint32_t owner, const Coalition& s) {
    auto it = index_.find(Key{owner, s});
    if (it == index_.end()) return std::nullopt;
    lru_.splice(lru_.begin(), lru_, it->second);
    return it->second->second;
  }

  void insert_locked(std::uint32_t owner, const Coalition& s, double value) {
    Key key{owner, s};
    if (auto it = index_.find(key); it != index_.end()) {
      it->second->second = value;
      lru_.splice(lru_.begin(), lru_, it->second);
      return;
    }
    lru_.emplace_front(key, value);
    index_.emplace(std::move(key), lru_.begin());
    while (index_.size() > budget_) {
      index_.erase(lru_.back().first);
      lru_.pop_back();
      ++evictions_;
    }
  }

  mutable std::mutex mu_;
  std::size_t budget_;
  std::unordered_map<std::string, std::uint32_t> owners_;
  std::list<Entry> lru_;
  std::unordered_map<Key, std::list<Entry>::iterator, KeyHash> index_;
  std::uint64_t evictions_ = 0;
};

struct CacheStats {
  std::uint64_t requests = 0;    // coalitions asked for, duplicates included
  std::uint64_t hits = 0;        // served without reaching the evaluator
  std::uint64_t dispatched = 0;  // coalitions sent to the evaluator
  std::uint64_t batches = 0;     // evaluate_batch calls on the evaluator

  double hit_rate() const {
    return requests == 0 ? 0.0 : static_cast<double>(hits) / static_cast<double>(requests);
  }
};

/// Memoizing front for a GameEvaluator. Batches are deduplicated before
/// dispatch, and a coalition that another thread is already evaluating is
/// waited on rather than sent twice. Evaluators that are not
/// concurrency-safe get their dispatches serialized.
class CachedGame final : public GameEvaluator {
 public:
  explicit CachedGame(GameEvaluator& game,
                      std::shared_ptr<EvalCache> cache = std::make_shared<EvalCache>())
      : game_(game), cache_(std::move(cache)), owner_(cache_->intern(game.descriptor())) {}

  int num_players() const override { return game_.num_players(); }
  std::string descriptor() const override { return game_.descriptor(); }
  bool concurrency_safe() const override { return true; }

  std::vector<double> evaluate_batch(std::span<const Coalition> coalitions) override {
    const int n = game_.num_players();
    for (const auto& c : coalitions) {
      if (c.num_players() != n) {
        fail(ErrorCode::kInvalidArgument, "coalition built for n=" +
                                              std::to_string(c.num_players()) +
                                              ", game has n=" + std::to_string(n));
      }
    }

    std::vector<double> out(coalitions.size());
    std::unordered_map<Coalition, std::vector<std::size_t>, CoalitionHash> pending;
    std::vector<Coalition> own;
    std::vector<std::promise<double>> own_promises;
    std::vector<std::pair<const Coalition*, std::shared_future<double>>> foreign;
    std::uint64_t hits = 0;

    {
      std::lock_guard lock(mu_);
      std::lock_guard cache_lock(cache_->mu_);
      for (std::size_t k = 0; k < coalitions.size(); ++k) {
        const Coalition& c = coalitions[k];
        if (auto it = pending.find(c); it != pending.end()) {
          it->second.push_back(k);
          ++hits;
          continue;
        }
        if (auto v = cache_->lookup_locked(owner_, c)) {
          out[k] = *v;
          ++hits;
          continue;
        }
        pending[c].push_back(k);
        if (auto it = inflight_.find(c); it != inflight_.end()) {
          foreign.emplace_back(&c, it->second);
          ++hits;
        } else {
          own.push_back(c);
          own_promises.emplace_back();
          inflight_.emplace(c, own_promises.back().get_future().share());
        }
      }
      stats_.requests += coalitions.size();
      stats_.hits += hits;
      stats_.dispatched += own.size();
      if (!own.empty()) ++stats_.batches;
    }

    if (!own.empty()) dispatch(own, own_promises, pending, out);

    for (auto& [c, fut] : foreign) {
      const double v = fut.get();
      for (std::size_t k : pending.at(*c)) out[k] = v;
    }
    return out;
  }

  CacheStats stats() const {
    std::lock_guard lock(mu_);
    return stats_;
  }

  GameEvaluator& underlying() { return game_; }
  EvalCache& cache() { return *cache_; }

 private:
  void dispatch(const std::vector<Coalition>& own, std::vector<std::promise<double>>& promises,
                const std::unordered_map<Coalition, std::vector<std::size_t>, CoalitionHash>& pending,
                std::vector<double>& out) {
    std::vector<double> values;
    std::exception_ptr error;
    try {
      values = call_underlying(own);
      if (values.size() != own.size()) {
        fail(ErrorCode::kEvaluatorFailure, "evaluator returned " + std::to_string(values.size()) +
                                               " scores for " + std::to_string(own.size()) +
                                               " coalitions");
      }
    } catch (...) {
      error = locate_failure(own, std::current_exception());
    }

    std::lock_guard lock(mu_);
    std::lock_guard cache_lock(cache_->mu_);
    for (std::size_t k = 0; k < own.size(); ++k) {
      if (error) {
        promises[k].set_exception(error);
      } else {
        cache_->insert_locked(owner_, own[k], values[k]);
        promises[k].set_value(values[k]);
        for (std::size_t slot : pending.at(own[k])) out[slot] = values[k];
      }
      inflight_.erase(own[k]);
    }
    if (error) std::rethrow_exception(error);
  }

  std::vector<double> call_underlying(std::span<const Coalition> batch) {
    if (game_.concurrency_safe()) return game_.evaluate_batch(batch);
    std::lock_guard lock(dispatch_mu_);
    return game_.evaluate_batch(batch);
  }

  // Re-runs a failed batch one coalition at a time so the error names the
  // coalition that caused it. Transport failures pass through unchanged.
  std::exception_ptr locate_failure(const std::vector<Coalition>& own, std::exception_ptr batch_error) {
    try {
      std::rethrow_exception(batch_error);
    } catch (const Error& e) {
      if (e.code() == ErrorCode::kRemoteError || e.code() == ErrorCode::kTimeout ||
          e.code() == ErrorCode::kProtocolError) {
        return batch_error;
      }
    } catch (...) {
    }
    auto describe = [](std::exception_ptr e) -> std::string {
      try {
        std::rethrow_exception(e);
      } catch (const std::exception& ex) {
        return ex.what();
      } catch (...) {
        return "unknown exception";
      }
    };
    if (own.size() > 1) {
      for (const auto& c : own) {
        try {
          (void)call_underlying(std::span<const Coalition>(&c, 1));
        } catch (...) {
          return std::make_exception_ptr(
              Error(ErrorCode::kEvaluatorFailure,
                    "coalition " + c.to_hex() + ": " + describe(std::current_exception())));
        }
      }
    }
    return std::make_exception_ptr(Error(
        ErrorCode::kEvaluatorFailure,
        (own.size() == 1 ? "coalition " + own.front().to_hex() + ": " : std::string()) +
            describe(batch_error)));
  }

  GameEvaluator& game_;
  std::shared_ptr<EvalCache> cache_;
  std::uint32_t owner_;
  mutable std::mutex mu_;
  std::mutex dispatch_mu_;
  std::unordered_map<Coalition, std::shared_future<double>, CoalitionHash> inflight_;
  CacheStats stats_;
};

/// Scores for `coalitions` through `cached`, in input order.
inline std::vector<double> evaluate_cached(CachedGame& cached, std::span<const Coalition> coalitions) {
  return cached.evaluate_batch(coalitions);
}

}  // namespace moi

#endif  // MOI_CACHE_HPP_
