#include <gtest/gtest.h>

#include <algorithm>
#include <random>
#include <set>

#include "edgeflow/flow.hpp"
#include "support/random_flow.hpp"

using namespace edgeflow;

namespace {

FlowGraph ocr_flow() {
  FlowGraph g;
  g.tabs = {{"main", "Main", false}, {"tab-ocr", "OCR", true}};
  g.nodes = {
      {"in", "main", "inject", {}},
      {"to-ocr", "main", "link-out", {{"target", "ocr-in"}}},
      {"ocr-in", "tab-ocr", "link-in", {}},
      {"ocr", "tab-ocr", "work", {{"work_units", "24.5"}}},
      {"ocr-out", "tab-ocr", "link-out", {{"target", "back"}}},
      {"back", "main", "link-in", {}},
      {"out", "main", "sink", {}},
  };
  g.wires = {{"in", "to-ocr"}, {"ocr-in", "ocr"}, {"ocr", "ocr-out"}, {"back", "out"}};
  return g;
}

std::vector<ViolationCode> codes(const std::vector<Violation>& v) {
  std::vector<ViolationCode> out;
  for (const auto& x : v) out.push_back(x.code);
  return out;
}

FlowError::Code rewrite_error(const FlowGraph& g, std::string_view policy = "jobs:4") {
  try {
    extract_offloadable(g, "http://remote:1880", policy);
  } catch (const FlowError& e) {
    return e.code();
  }
  ADD_FAILURE() << "rewrite did not fail";
  return FlowError::Code::Syntax;
}

}  // namespace

TEST(ParseFlow, ThreeNodeServerFlow) {
  const auto g = parse_flow(R"({
    "tabs": [{"id": "t1", "name": "Server", "offloadable": false}],
    "nodes": [
      {"id": "a", "tab": "t1", "kind": "http-in", "config": {"url": "/ocr"}},
      {"id": "b", "tab": "t1", "kind": "function"},
      {"id": "c", "tab": "t1", "kind": "http-out", "config": {}}],
    "wires": [{"from": "a", "to": "b"}, {"from": "b", "to": "c"}]})");
  EXPECT_EQ(g.tabs.size(), 1u);
  EXPECT_EQ(g.nodes.size(), 3u);
  EXPECT_EQ(g.wires.size(), 2u);
  EXPECT_EQ(g.nodes[0].get("url"), "/ocr");
  EXPECT_EQ(g.nodes[1].kind, "function");
}

TEST(ParseFlow, EmptyDocumentIsValid) {
  const auto g = parse_flow(R"({"tabs": [], "nodes": [], "wires": []})");
  EXPECT_TRUE(g.nodes.empty());
  EXPECT_TRUE(g.wires.empty());
  EXPECT_TRUE(validate(g).empty());
}

TEST(ParseFlow, DanglingWireNamesTheUnknownId) {
  try {
    parse_flow(R"({"tabs": [{"id": "t", "name": "", "offloadable": false}],
                   "nodes": [{"id": "a", "tab": "t", "kind": "inject", "config": {}}],
                   "wires": [{"from": "a", "to": "x9"}]})");
    FAIL();
  } catch (const FlowError& e) {
    EXPECT_EQ(e.code(), FlowError::Code::Semantic);
    EXPECT_EQ(e.subject(), "x9");
    EXPECT_NE(std::string(e.what()).find("x9"), std::string::npos);
  }
}

TEST(ParseFlow, SyntaxErrorReportsPosition) {
  try {
    parse_flow(R"({"tabs": [}, "nodes": []})");
    FAIL();
  } catch (const FlowError& e) {
    EXPECT_EQ(e.code(), FlowError::Code::Syntax);
    EXPECT_EQ(e.position(), 11u);
  }
}

TEST(ParseFlow, RejectsUnknownFields) {
  EXPECT_THROW(parse_flow(R"({"tabs": [], "nodes": [], "wires": [], "extra": 1})"), FlowError);
  EXPECT_THROW(parse_flow(R"({"tabs": [{"id": "t", "name": "", "offloadable": false, "x": 1}], "nodes": [], "wires": []})"),
               FlowError);
  EXPECT_THROW(parse_flow(R"({"tabs": [], "nodes": [{"id": "a", "tab": "t", "kind": "sink", "wires": []}], "wires": []})"),
               FlowError);
}

TEST(ParseFlow, RejectsWrongTypes) {
  EXPECT_THROW(parse_flow(R"([])"), FlowError);
  EXPECT_THROW(parse_flow(R"({"tabs": [{"id": 3, "name": "", "offloadable": false}], "nodes": [], "wires": []})"),
               FlowError);
  EXPECT_THROW(parse_flow(R"({"tabs": [{"id": "t", "name": "", "offloadable": "yes"}], "nodes": [], "wires": []})"),
               FlowError);
}

TEST(ParseFlow, NumericConfigIsStringified) {
  const auto g = parse_flow(R"({"tabs": [{"id": "t", "name": "", "offloadable": false}],
    "nodes": [{"id": "w", "tab": "t", "kind": "work", "config": {"work_units": 12.5}}], "wires": []})");
  EXPECT_EQ(g.nodes[0].get("work_units"), "12.5");
}

TEST(SerializeFlow, RoundTripIsIdentity) {
  const auto g = ocr_flow();
  EXPECT_EQ(parse_flow(serialize_flow(g)), g);
  EXPECT_EQ(parse_flow(serialize_flow(g, -1)), g);
}

TEST(SerializeFlow, RoundTripOnRandomFlows) {
  std::mt19937_64 rng(11);
  for (int i = 0; i < 300; ++i) {
    const auto shape = gen::random_flow(rng);
    ASSERT_EQ(parse_flow(serialize_flow(shape.flow)), shape.flow) << i;
  }
}

TEST(Validate, ValidFlowHasNoViolations) { EXPECT_TRUE(validate(ocr_flow()).empty()); }

TEST(Validate, DuplicateNodeId) {
  auto g = ocr_flow();
  g.nodes.push_back({"ocr", "main", "sink", {}});
  const auto v = validate(g);
  ASSERT_EQ(v.size(), 1u);
  EXPECT_EQ(v[0].code, ViolationCode::DuplicateId);
  EXPECT_EQ(v[0].subject, "ocr");
}

TEST(Validate, TwoOffloadableTabs) {
  auto g = ocr_flow();
  g.tabs[0].offloadable = true;
  EXPECT_EQ(codes(validate(g)), std::vector{ViolationCode::MultipleOffloadableTabs});
}

TEST(Validate, StructuralViolations) {
  auto g = ocr_flow();
  g.tabs.push_back({"main", "again", false});
  g.nodes.push_back({"lost", "nowhere", "sink", {}});
  g.wires.push_back({"out", "out"});
  g.wires.push_back({"ghost", "out"});
  const auto c = codes(validate(g));
  for (auto want : {ViolationCode::DuplicateTabId, ViolationCode::UnknownTab, ViolationCode::SelfWire,
                    ViolationCode::DanglingWire})
    EXPECT_NE(std::find(c.begin(), c.end(), want), c.end()) << to_string(want);
}

TEST(Validate, LinkTargets) {
  auto g = ocr_flow();
  g.nodes[1].config["target"] = "missing";
  EXPECT_EQ(codes(validate(g)), std::vector{ViolationCode::DanglingLink});
  g.nodes[1].config["target"] = "out";
  EXPECT_EQ(codes(validate(g)), std::vector{ViolationCode::DanglingLink});
}

TEST(Validate, KindSpecificConfig) {
  auto g = ocr_flow();
  g.nodes[3].config.clear();
  EXPECT_EQ(codes(validate(g)), std::vector{ViolationCode::MissingConfig});
  for (const char* bad : {"0", "-3", "abc", "nan", "inf", "1x"}) {
    g.nodes[3].config["work_units"] = bad;
    EXPECT_EQ(codes(validate(g)), std::vector{ViolationCode::InvalidConfig}) << bad;
  }
  g.nodes[3].config["work_units"] = "1";
  g.nodes.push_back({"ol", "main", "offload-link", {{"policy", "cpu:7"}}});
  const auto c = codes(validate(g));
  EXPECT_EQ(c, (std::vector{ViolationCode::InvalidConfig, ViolationCode::MissingConfig}));
}

TEST(Rewrite, HandBuiltExample) {
  const auto r = extract_offloadable(ocr_flow(), "http://remote:1880", "jobs:4");
  EXPECT_EQ(r.offload_node_id, "tab-ocr-olink");
  EXPECT_EQ(r.flow_id, "tab-ocr");

  FlowGraph local;
  local.tabs = {{"main", "Main", false}};
  local.nodes = {
      {"in", "main", "inject", {}},
      {"to-ocr", "main", "link-out", {{"target", "tab-ocr-olink"}}},
      {"back", "main", "link-in", {}},
      {"out", "main", "sink", {}},
      {"tab-ocr-olink",
       "main",
       "offload-link",
       {{"policy", "jobs:4"}, {"remote_url", "http://remote:1880"}, {"flow_id", "tab-ocr"}}},
  };
  local.wires = {{"in", "to-ocr"}, {"back", "out"}, {"tab-ocr-olink", "back"}};

  FlowGraph remote;
  remote.tabs = {{"tab-ocr", "OCR", true}};
  remote.nodes = {
      {"ocr-in", "tab-ocr", "link-in", {}},
      {"ocr", "tab-ocr", "work", {{"work_units", "24.5"}}},
      {"ocr-out", "tab-ocr", "link-out", {}},
  };
  remote.wires = {{"ocr-in", "ocr"}, {"ocr", "ocr-out"}};

  EXPECT_EQ(r.local_flow, local);
  EXPECT_EQ(r.remote_flow, remote);
}

TEST(Rewrite, Errors) {
  auto g = ocr_flow();
  g.tabs[1].offloadable = false;
  EXPECT_EQ(rewrite_error(g), FlowError::Code::NoOffloadableTab);

  g = ocr_flow();
  g.tabs[0].offloadable = true;
  EXPECT_EQ(rewrite_error(g), FlowError::Code::MultipleOffloadableTabs);

  g = ocr_flow();
  g.nodes.push_back({"ocr-out2", "tab-ocr", "link-out", {{"target", "back"}}});
  g.wires.push_back({"ocr", "ocr-out2"});
  EXPECT_EQ(rewrite_error(g), FlowError::Code::MultipleExits);

  g = ocr_flow();
  g.nodes.push_back({"ocr-in2", "tab-ocr", "link-in", {}});
  EXPECT_EQ(rewrite_error(g), FlowError::Code::MultipleEntries);

  g = ocr_flow();
  g.nodes[4].config.erase("target");
  EXPECT_EQ(rewrite_error(g), FlowError::Code::MissingExit);

  g = ocr_flow();
  g.nodes[1].config.erase("target");
  EXPECT_EQ(rewrite_error(g), FlowError::Code::MissingEntry);

  g = ocr_flow();
  g.nodes.push_back({"tab-ocr-olink", "main", "sink", {}});
  EXPECT_EQ(rewrite_error(g), FlowError::Code::IdCollision);

  EXPECT_EQ(rewrite_error(ocr_flow(), "jobs"), FlowError::Code::InvalidPolicy);

  g = ocr_flow();
  g.nodes.push_back({"stray", "tab-ocr", "sink", {}});
  g.wires.push_back({"in", "stray"});
  EXPECT_EQ(rewrite_error(g), FlowError::Code::ExternalLink);
}

TEST(Rewrite, RejectsLinksFromThirdTab) {
  auto g = ocr_flow();
  g.tabs.push_back({"aux", "Aux", false});
  g.nodes.push_back({"aux-in", "aux", "inject", {}});
  g.nodes.push_back({"aux-out", "aux", "link-out", {{"target", "ocr-in"}}});
  g.wires.push_back({"aux-in", "aux-out"});
  EXPECT_EQ(rewrite_error(g), FlowError::Code::ExternalLink);
}

TEST(Rewrite, PropertiesOnRandomFlows) {
  std::mt19937_64 rng(5);
  for (int i = 0; i < 300; ++i) {
    const auto shape = gen::random_flow(rng);
    ASSERT_TRUE(validate(shape.flow).empty()) << i;
    const auto r = extract_offloadable(shape.flow, "http://r", "cpu:0.5");

    EXPECT_EQ(r.local_flow.nodes.size() + r.remote_flow.nodes.size(), shape.flow.nodes.size() + 1);
    EXPECT_TRUE(validate(r.local_flow).empty()) << i;
    EXPECT_TRUE(validate(r.remote_flow).empty()) << i;

    std::set<std::string> ids, expected;
    for (const auto& n : r.local_flow.nodes) ids.insert(n.id);
    for (const auto& n : r.remote_flow.nodes) EXPECT_TRUE(ids.insert(n.id).second);
    for (const auto& n : shape.flow.nodes) expected.insert(n.id);
    expected.insert(r.offload_node_id);
    EXPECT_EQ(ids, expected);

    std::size_t olinks = 0;
    for (const auto& n : r.local_flow.nodes) olinks += n.is(kinds::offload_link);
    EXPECT_EQ(olinks, 1u);
    for (const auto& w : r.remote_flow.wires) {
      EXPECT_TRUE(r.remote_flow.find_node(w.from));
      EXPECT_TRUE(r.remote_flow.find_node(w.to));
    }
  }
}
