// Copyright 2026 The LSAT Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstdint>
#include <map>
#include <string>
#include <string_view>

namespace lsat {

// Tallies scalar multiply-accumulates performed by forward evaluation of the
// counted ops (matmul, linear, conv2d, attention). Elementwise ops are free.
//
// Counting is opt-in per thread: install a counter with CountingScope, and
// optionally attribute work to a named bucket with OpTagScope. Counts only
// grow until reset().
class OpCounter {
 public:
  std::uint64_t mul_adds() const { return total_; }
  // Mul-adds attributed to `tag` (0 when the tag was never active).
  std::uint64_t mul_adds(std::string_view tag) const;
  const std::map<std::string, std::uint64_t, std::less<>>& by_tag() const { return tagged_; }

  void reset();
  void add(std::uint64_t count, std::string_view tag);

 private:
  std::uint64_t total_ = 0;
  std::map<std::string, std::uint64_t, std::less<>> tagged_;
};

// Installs `counter` as the active counter on this thread for the scope's
// lifetime. Scopes nest; the innermost wins.
class CountingScope {
 public:
  explicit CountingScope(OpCounter& counter);
  ~CountingScope();
  CountingScope(const CountingScope&) = delete;
  CountingScope& operator=(const CountingScope&) = delete;

 private:
  OpCounter* previous_;
};

// Attributes counts recorded on this thread to `tag` while alive.
class OpTagScope {
 public:
  explicit OpTagScope(std::string_view tag);
  ~OpTagScope();
  OpTagScope(const OpTagScope&) = delete;
  OpTagScope& operator=(const OpTagScope&) = delete;

 private:
  std::string_view previous_;
};

// Adds `count` mul-adds to the active counter, if any.
void count_mul_adds(std::uint64_t count);

}  // namespace lsat
