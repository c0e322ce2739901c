#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include <deque>
#include <string>
#include <vector>

#include "dom.hpp"
#include "error.hpp"

using namespace domq;

namespace {

// seven-element login form used throughout this file; parent map is
// enumerated by hand from the nesting structure
const char* kLoginFixture =
    "<form>"
    "<label>username</label>"
    "<input class=\"username\" id=\"user\"/>"
    "<label>password</label>"
    "<input class=\"password\" id=\"pass\"/>"
    "<div><button id=\"login\">Login Now</button></div>"
    "</form>";

// node ids in preorder: 0 form, 1 label, 2 input, 3 label, 4 input,
// 5 div, 6 button
const std::vector<int> kLoginParents = {-1, 0, 0, 0, 0, 0, 5};

std::vector<std::uint8_t> brute_force_adjacency(const DomTree& t) {
  int n = t.size();
  std::vector<std::uint8_t> m(static_cast<std::size_t>(n) * n, 0);
  for (int i = 0; i < n; ++i)
    for (int j = 0; j < n; ++j) {
      bool linked = (t.node(i).parent && *t.node(i).parent == j) ||
                    (t.node(j).parent && *t.node(j).parent == i);
      m[static_cast<std::size_t>(i) * n + j] = linked ? 1 : 0;
    }
  return m;
}

}  // namespace

TEST_CASE("two-element document") {
  DomTree t = parse_html("<div><button>Submit</button></div>");
  REQUIRE(t.size() == 2);
  CHECK(t.node(0).tag == "div");
  CHECK(t.node(1).tag == "button");
  CHECK(t.node(1).text == std::vector<std::string>{"submit"});
  CHECK(!t.node(0).parent.has_value());
  CHECK(*t.node(1).parent == 0);
  CHECK(t.node(0).children == std::vector<int>{1});
  for (const auto& n : t.nodes()) {
    CHECK(!n.focused);
    CHECK(!n.tampered);
  }
}

TEST_CASE("single node document") {
  DomTree t = parse_html("<div></div>");
  CHECK(t.size() == 1);
  CHECK(t.edges().empty());
  CHECK(adjacency(t) == std::vector<std::uint8_t>{0});
}

TEST_CASE("login fixture parses to the hand-enumerated parent map") {
  DomTree t = parse_html(kLoginFixture);
  REQUIRE(t.size() == 7);
  for (int i = 0; i < 7; ++i) {
    if (kLoginParents[i] < 0)
      CHECK(!t.node(i).parent.has_value());
    else
      CHECK(*t.node(i).parent == kLoginParents[i]);
  }
  CHECK(t.node(2).classes == std::vector<std::string>{"username"});
  CHECK(t.node(6).text == std::vector<std::string>{"login", "now"});
  CHECK(t.find_by_html_id("login") == 6);
}

TEST_CASE("adjacency matches the pairwise brute force") {
  for (const char* doc :
       {"<div></div>", "<div><button>a</button></div>", kLoginFixture}) {
    DomTree t = parse_html(doc);
    CHECK(adjacency(t) == brute_force_adjacency(t));
  }
  DomTree two = parse_html("<div><span>x</span></div>");
  CHECK(adjacency(two) == std::vector<std::uint8_t>{0, 1, 1, 0});
}

TEST_CASE("adjacency is symmetric with a zero diagonal and 2(n-1) entries") {
  DomTree t = parse_html(kLoginFixture);
  auto m = adjacency(t);
  int n = t.size();
  int ones = 0;
  for (int i = 0; i < n; ++i) {
    CHECK(m[static_cast<std::size_t>(i) * n + i] == 0);
    for (int j = 0; j < n; ++j) {
      CHECK(m[static_cast<std::size_t>(i) * n + j] ==
            m[static_cast<std::size_t>(j) * n + i]);
      ones += m[static_cast<std::size_t>(i) * n + j];
    }
  }
  CHECK(ones == 2 * (n - 1));
}

TEST_CASE("every node is reachable from the root") {
  DomTree t = parse_html(kLoginFixture);
  std::vector<char> seen(t.size(), 0);
  std::deque<int> q{t.root()};
  seen[t.root()] = 1;
  int count = 0;
  while (!q.empty()) {
    int u = q.front();
    q.pop_front();
    ++count;
    for (int c : t.node(u).children)
      if (!seen[c]) {
        seen[c] = 1;
        q.push_back(c);
      }
  }
  CHECK(count == t.size());
}

TEST_CASE("parse-serialize-parse is a fixed point") {
  const char* corpus[] = {
      "<div><button>Submit</button></div>",
      "<div></div>",
      kLoginFixture,
      "<div><ul><li><a class=\"r1\">stone</a></li><li><a class=\"r2\">gold</a></li>"
      "</ul><a class=\"next\" id=\"next\">next</a></div>",
      "<form><ul><li><input type=\"checkbox\"/><label>fern</label></li></ul>"
      "<button id=\"submit\">submit</button></form>",
  };
  for (const char* doc : corpus) {
    DomTree once = parse_html(doc);
    DomTree twice = parse_html(serialize_html(once));
    CHECK(once == twice);
    CHECK(serialize_html(once) == serialize_html(twice));
  }
}

TEST_CASE("tokenization lowercases and splits on punctuation") {
  CHECK(tokenize("Hello, World!") == std::vector<std::string>{"hello", "world"});
  CHECK(tokenize("  a-b_c 9x ") == std::vector<std::string>{"a", "b", "c", "9x"});
  CHECK(tokenize("").empty());
}

TEST_CASE("node text is capped at four tokens") {
  DomTree t = parse_html("<div>one two three four five six</div>");
  CHECK(t.node(0).text == std::vector<std::string>{"one", "two", "three", "four"});
}

TEST_CASE("checkbox inputs surface as their own tag") {
  DomTree t = parse_html("<div><input type=\"checkbox\"/></div>");
  CHECK(t.node(1).tag == "checkbox");
  DomTree round = parse_html(serialize_html(t));
  CHECK(round.node(1).tag == "checkbox");
}

TEST_CASE("malformed input reports a byte offset") {
  CHECK_THROWS_AS(parse_html("<div><button>x</div>"), ParseError);
  CHECK_THROWS_AS(parse_html("<div>"), ParseError);
  CHECK_THROWS_AS(parse_html("<div foo=\"1\"></div>"), ParseError);
  CHECK_THROWS_AS(parse_html("<table></table>"), ParseError);
  CHECK_THROWS_AS(parse_html("<div></div><div></div>"), ParseError);
  try {
    parse_html("<div><button>x</div>");
    CHECK(false);
  } catch (const ParseError& e) {
    CHECK(e.offset > 0);
  }
}

TEST_CASE("documents beyond the node cap are rejected") {
  std::string html = "<div>";
  for (int i = 0; i < kMaxDoms; ++i) html += "<span>x</span>";
  html += "</div>";
  CHECK_THROWS_AS(parse_html(html), TreeTooLarge);
  // exactly at the cap is fine
  std::string ok = "<div>";
  for (int i = 0; i < kMaxDoms - 1; ++i) ok += "<span>x</span>";
  ok += "</div>";
  CHECK(parse_html(ok).size() == kMaxDoms);
}

TEST_CASE("json round trip preserves runtime state") {
  DomTree t = parse_html(kLoginFixture);
  t.node(2).focused = true;
  t.node(4).tampered = true;
  t.node(4).text = {"coral"};
  DomTree back = tree_from_json(tree_to_json(t));
  CHECK(back == t);
}
