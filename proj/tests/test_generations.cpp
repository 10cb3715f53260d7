#include <catch2/catch_amalgamated.hpp>

#include <vector>

#include "rldp/generations.hpp"

using rldp::GenerationId;
using rldp::GenerationStore;
using rldp::NodeId;

TEST_CASE("a fresh store opens generation 1", "[generations]") {
  GenerationStore gs;
  CHECK(gs.most_recent_id() == 0);
  CHECK(gs.select_generation(7, 0.0, 30) == 1);
  CHECK(gs.most_recent_id() == 1);
  CHECK(gs.find(1) != nullptr);
  // selection alone does not make the source a member yet
  CHECK(gs.find(1)->members.empty());
}

TEST_CASE("sources join the latest open generation they are not in",
          "[generations]") {
  GenerationStore gs;
  const GenerationId g = gs.select_generation(3, 1.0, 30);
  gs.note_member(g, 3, 1.0);

  // another source hears it later and joins the same generation
  gs.observe(g, std::vector<NodeId>{3}, 2.0);
  CHECK(gs.select_generation(5, 2.5, 30) == g);
  gs.note_member(g, 5, 2.5);

  // the first source must not contribute twice: it opens a new id
  const GenerationId g2 = gs.select_generation(3, 3.0, 30);
  CHECK(g2 != g);
  CHECK(g2 == gs.most_recent_id());

  const auto& v = *gs.find(g);
  CHECK(v.members == std::vector<NodeId>{3, 5});
  CHECK(v.contains(3));
  CHECK(!v.contains(4));
}

TEST_CASE("full generations are closed to new natives", "[generations]") {
  GenerationStore gs;
  const GenerationId g = gs.select_generation(0, 0.0, 2);
  gs.note_member(g, 0, 0.0);
  CHECK(gs.select_generation(1, 0.1, 2) == g);
  gs.note_member(g, 1, 0.1);
  // limit 2 reached: next selection opens a new generation
  const GenerationId g2 = gs.select_generation(2, 0.2, 2);
  CHECK(g2 != g);
}

TEST_CASE("recency drives selection, id breaks ties", "[generations]") {
  GenerationStore gs;
  gs.observe(4, std::vector<NodeId>{9}, 5.0);
  gs.observe(2, std::vector<NodeId>{8}, 7.0);  // older id, seen later
  CHECK(gs.select_generation(1, 8.0, 30) == 2);

  gs.observe(4, std::vector<NodeId>{}, 7.0);  // now tied on last_seen
  CHECK(gs.select_generation(1, 8.0, 30) == 4);
}

TEST_CASE("observation merges member sets and advances recency",
          "[generations]") {
  GenerationStore gs;
  gs.observe(10, std::vector<NodeId>{4, 1}, 1.0);
  gs.observe(10, std::vector<NodeId>{4, 6}, 2.0);
  const auto& v = *gs.find(10);
  CHECK(v.members == std::vector<NodeId>{1, 4, 6});
  CHECK(v.last_seen == 2.0);
  CHECK(gs.most_recent_id() == 10);
  // fresh ids continue above anything ever observed
  CHECK(gs.select_generation(1, 3.0, 2) > 10);
}

TEST_CASE("note_member never moves recency backwards", "[generations]") {
  GenerationStore gs;
  gs.observe(3, std::vector<NodeId>{1}, 5.0);
  gs.note_member(3, 2, 4.0);  // stale timestamp
  CHECK(gs.find(3)->last_seen == 5.0);
  CHECK(gs.find(3)->members == std::vector<NodeId>{1, 2});
}
