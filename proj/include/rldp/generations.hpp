#pragma once

#include <algorithm>
#include <cstdint>
#include <map>
#include <span>
#include <vector>

#include "rldp/rlnc.hpp"

namespace rldp {

// What a node knows about one generation: which sources have contributed and
// when the generation was last heard from. A generation at the size limit is
// closed to new natives.
struct GenerationView {
  GenerationId id = 0;
  std::vector<NodeId> members;  // ascending source ids
  double last_seen = 0.0;

  bool contains(NodeId src) const {
    return std::binary_search(members.begin(), members.end(), src);
  }
};

// Per-node generation bookkeeping. A generation becomes known on creation or
// on reception of any packet labeling it, innovative or not. Id collisions
// between nodes merge silently: the views converge as labels spread.
class GenerationStore {
 public:
  void observe(GenerationId id, std::span<const NodeId> members, double now) {
    GenerationView& v = views_[id];
    v.id = id;
    v.last_seen = now;
    for (NodeId m : members) note_member(id, m, now);
    most_recent_id_ = std::max(most_recent_id_, id);
  }

  void note_member(GenerationId id, NodeId src, double now) {
    GenerationView& v = views_[id];
    v.id = id;
    v.last_seen = std::max(v.last_seen, now);
    auto it = std::lower_bound(v.members.begin(), v.members.end(), src);
    if (it == v.members.end() || *it != src) v.members.insert(it, src);
    most_recent_id_ = std::max(most_recent_id_, id);
  }

  // Strictly inter-source selection for a source about to add a native: join
  // the most recently seen open generation unless it already carries a packet
  // from this source; otherwise open a fresh id.
  GenerationId select_generation(NodeId src, double now,
                                 std::uint32_t size_limit) {
    const GenerationView* best = nullptr;
    for (const auto& [id, v] : views_) {
      if (v.members.size() >= size_limit) continue;
      if (!best || v.last_seen > best->last_seen ||
          (v.last_seen == best->last_seen && v.id > best->id))
        best = &v;
    }
    if (best && !best->contains(src)) return best->id;
    const GenerationId fresh = ++most_recent_id_;
    GenerationView& v = views_[fresh];
    v.id = fresh;
    v.last_seen = now;
    return fresh;
  }

  const GenerationView* find(GenerationId id) const {
    auto it = views_.find(id);
    return it == views_.end() ? nullptr : &it->second;
  }

  GenerationId most_recent_id() const { return most_recent_id_; }
  const std::map<GenerationId, GenerationView>& views() const { return views_; }

 private:
  std::map<GenerationId, GenerationView> views_;
  GenerationId most_recent_id_ = 0;  // fresh ids start at 1
};

}  // namespace rldp
