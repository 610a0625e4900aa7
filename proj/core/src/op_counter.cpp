// Copyright 2026 The LSAT Authors
// SPDX-License-Identifier: Apache-2.0

#include "lsat/op_counter.hpp"

namespace lsat {
namespace {

thread_local OpCounter* active_counter = nullptr;
thread_local std::string_view active_tag;

}  // namespace

std::uint64_t OpCounter::mul_adds(std::string_view tag) const {
  auto it = tagged_.find(tag);
  return it == tagged_.end() ? 0 : it->second;
}

void OpCounter::reset() {
  total_ = 0;
  tagged_.clear();
}

void OpCounter::add(std::uint64_t count, std::string_view tag) {
  total_ += count;
  if (!tag.empty()) {
    auto it = tagged_.find(tag);
    if (it == tagged_.end()) {
      tagged_.emplace(std::string(tag), count);
    } else {
      it->second += count;
    }
  }
}

CountingScope::CountingScope(OpCounter& counter) : previous_(active_counter) {
  active_counter = &counter;
}

CountingScope::~CountingScope() { active_counter = previous_; }

OpTagScope::OpTagScope(std::string_view tag) : previous_(active_tag) { active_tag = tag; }

OpTagScope::~OpTagScope() { active_tag = previous_; }

void count_mul_adds(std::uint64_t count) {
  if (active_counter != nullptr) {
    active_counter->add(count, active_tag);
  }
}

}  // namespace lsat
