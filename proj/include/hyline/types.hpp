#pragma once

#include <cstdint>
#include <string_view>
#include <vector>

namespace hyline {

using NodeId = std::int32_t;
using LinkId = std::int32_t;
using HostId = std::int32_t;
using FlowId = std::int64_t;
using Bytes = std::int64_t;

inline constexpr Bytes kKB = 1000;
inline constexpr Bytes kMB = 1000 * kKB;

/// Flows below the threshold H are first class (high-priority queue, no
/// scheduling); the rest are second class and go through the manager.
enum class FlowClass : std::uint8_t { first = 1, second = 2 };

constexpr std::string_view to_string(FlowClass c) {
  return c == FlowClass::first ? "1" : "2";
}

inline FlowClass classify(Bytes size, Bytes threshold) {
  return size < threshold ? FlowClass::first : FlowClass::second;
}

/// Ordered link ids from the source NIC to the destination NIC.
struct Path {
  std::vector<LinkId> links;

  std::size_t hops() const { return links.size(); }
  bool empty() const { return links.empty(); }
  bool contains(LinkId l) const {
    for (LinkId x : links)
      if (x == l) return true;
    return false;
  }
  friend bool operator==(const Path&, const Path&) = default;
  friend auto operator<=>(const Path&, const Path&) = default;
};

}  // namespace hyline
