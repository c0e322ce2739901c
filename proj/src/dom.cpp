#include "dom.hpp"

#include <algorithm>
#include <array>
#include <cctype>
#include <deque>
#include <sstream>

#include "error.hpp"
#include "json.hpp"

namespace domq {
namespace {

const std::array<std::string_view, 12> kKnownTags = {
    "div", "button", "input", "a",    "label",  "ul",
    "li",  "span",   "form",  "select", "option", "checkbox"};

bool known_tag(std::string_view t) {
  return std::find(kKnownTags.begin(), kKnownTags.end(), t) != kKnownTags.end();
}

bool is_name_char(char c) {
  return std::isalnum(static_cast<unsigned char>(c)) || c == '-' || c == '_';
}

}  // namespace

DomTree::DomTree(std::vector<DomNode> nodes) : nodes_(std::move(nodes)) {
  validate();
}

int DomTree::root() const {
  for (const auto& n : nodes_)
    if (!n.parent) return n.id;
  throw Error(ErrorCode::internal, "tree has no root");
}

std::vector<std::pair<int, int>> DomTree::edges() const {
  std::vector<std::pair<int, int>> out;
  out.reserve(nodes_.empty() ? 0 : nodes_.size() - 1);
  for (const auto& n : nodes_)
    if (n.parent) out.emplace_back(std::min(*n.parent, n.id), std::max(*n.parent, n.id));
  return out;
}

int DomTree::find_by_html_id(std::string_view html_id) const {
  for (const auto& n : nodes_)
    if (n.html_id == html_id) return n.id;
  return -1;
}

void DomTree::validate() const {
  const int n = size();
  if (n == 0) throw Error(ErrorCode::empty_page, "empty tree");
  if (n > kMaxDoms) throw TreeTooLarge(n, kMaxDoms);
  int roots = 0;
  for (int i = 0; i < n; ++i) {
    const DomNode& v = nodes_[i];
    if (v.id != i) throw Error(ErrorCode::internal, "node id mismatch");
    if (!v.parent) {
      ++roots;
    } else {
      int p = *v.parent;
      if (p < 0 || p >= n) throw Error(ErrorCode::internal, "parent out of range");
      const auto& pc = nodes_[p].children;
      if (std::find(pc.begin(), pc.end(), i) == pc.end())
        throw Error(ErrorCode::internal, "parent does not list child");
    }
    for (int c : v.children) {
      if (c < 0 || c >= n || !nodes_[c].parent || *nodes_[c].parent != i)
        throw Error(ErrorCode::internal, "child link inconsistent");
    }
  }
  if (roots != 1) throw Error(ErrorCode::internal, "tree must have exactly one root");
  // connectivity (acyclicity follows: n-1 edges, all reachable)
  std::vector<char> seen(n, 0);
  std::deque<int> q{root()};
  seen[root()] = 1;
  int count = 0;
  while (!q.empty()) {
    int u = q.front();
    q.pop_front();
    ++count;
    for (int c : nodes_[u].children)
      if (!seen[c]) {
        seen[c] = 1;
        q.push_back(c);
      }
  }
  if (count != n) throw Error(ErrorCode::internal, "tree not connected");
}

std::vector<std::uint8_t> adjacency(const DomTree& tree) {
  const int n = tree.size();
  std::vector<std::uint8_t> m(static_cast<std::size_t>(n) * n, 0);
  for (const auto& v : tree.nodes()) {
    if (!v.parent) continue;
    m[static_cast<std::size_t>(v.id) * n + *v.parent] = 1;
    m[static_cast<std::size_t>(*v.parent) * n + v.id] = 1;
  }
  return m;
}

std::vector<std::string> tokenize(std::string_view s) {
  std::vector<std::string> out;
  std::string cur;
  auto flush = [&] {
    if (!cur.empty()) {
      out.push_back(cur);
      cur.clear();
    }
  };
  for (char ch : s) {
    unsigned char c = static_cast<unsigned char>(ch);
    if (std::isalnum(c) || c >= 0x80) {
      cur.push_back(static_cast<char>(std::tolower(c)));
    } else {
      flush();
    }
  }
  flush();
  return out;
}

namespace {

class Parser {
 public:
  Parser(std::string_view src, int max_doms) : src_(src), max_doms_(max_doms) {}

  DomTree run() {
    skip_ws();
    if (eof()) fail("empty document");
    parse_element(std::nullopt);
    skip_ws();
    if (!eof()) fail("trailing content after root element");
    return DomTree(std::move(nodes_));
  }

 private:
  bool eof() const { return pos_ >= src_.size(); }
  char peek() const { return src_[pos_]; }
  [[noreturn]] void fail(const std::string& msg) const { throw ParseError(pos_, msg); }

  void skip_ws() {
    while (!eof() && std::isspace(static_cast<unsigned char>(peek()))) ++pos_;
  }

  std::string read_name() {
    std::size_t start = pos_;
    while (!eof() && is_name_char(peek())) ++pos_;
    if (pos_ == start) fail("expected a name");
    return std::string(src_.substr(start, pos_ - start));
  }

  void expect(char c, const char* what) {
    if (eof() || peek() != c) fail(std::string("expected ") + what);
    ++pos_;
  }

  std::string read_quoted() {
    expect('"', "'\"'");
    std::size_t start = pos_;
    while (!eof() && peek() != '"') ++pos_;
    if (eof()) fail("unterminated attribute value");
    std::string v(src_.substr(start, pos_ - start));
    ++pos_;
    return v;
  }

  // parses one element (and its subtree); returns its node index
  int parse_element(std::optional<int> parent) {
    expect('<', "'<'");
    std::string tag = read_name();
    std::string lowered;
    for (char c : tag) lowered.push_back(static_cast<char>(std::tolower(static_cast<unsigned char>(c))));
    if (lowered == "script" || lowered == "style") fail("unsupported tag: " + lowered);

    DomNode node;
    node.id = static_cast<int>(nodes_.size());
    node.parent = parent;
    std::string type_attr;

    // attributes
    for (;;) {
      skip_ws();
      if (eof()) fail("unterminated start tag");
      if (peek() == '>' || peek() == '/') break;
      std::size_t attr_pos = pos_;
      std::string attr = read_name();
      skip_ws();
      expect('=', "'=' after attribute name");
      skip_ws();
      std::string value = read_quoted();
      if (attr == "class") {
        node.classes = tokenize(value);
      } else if (attr == "id") {
        node.html_id = value;
      } else if (attr == "type") {
        type_attr = value;
      } else {
        pos_ = attr_pos;
        fail("unknown attribute: " + attr);
      }
    }

    if (lowered == "input" && type_attr == "checkbox") lowered = "checkbox";
    if (!known_tag(lowered)) fail("unknown tag: " + lowered);
    node.tag = lowered;

    if (static_cast<int>(nodes_.size()) + 1 > max_doms_)
      throw TreeTooLarge(nodes_.size() + 1, max_doms_);
    nodes_.push_back(std::move(node));
    int self = static_cast<int>(nodes_.size()) - 1;
    if (parent) nodes_[*parent].children.push_back(self);

    if (peek() == '/') {
      ++pos_;
      expect('>', "'>' after '/'");
      return self;
    }
    expect('>', "'>'");

    // content: interleaved text runs and child elements
    std::string text_acc;
    for (;;) {
      if (eof()) fail("unclosed tag: " + tag);
      if (peek() == '<') {
        if (pos_ + 1 < src_.size() && src_[pos_ + 1] == '/') break;
        parse_element(self);
      } else {
        text_acc.push_back(peek());
        ++pos_;
      }
    }
    // closing tag
    pos_ += 2;  // "</"
    std::string close = read_name();
    if (close != tag) fail("mismatched closing tag: expected </" + tag + ">");
    skip_ws();
    expect('>', "'>'");

    auto toks = tokenize(text_acc);
    if (static_cast<int>(toks.size()) > kMaxTextTokensPerNode)
      toks.resize(kMaxTextTokensPerNode);
    nodes_[self].text = std::move(toks);
    return self;
  }

  std::string_view src_;
  std::size_t pos_ = 0;
  int max_doms_;
  std::vector<DomNode> nodes_;
};

void serialize_node(const DomTree& t, int id, std::string& out) {
  const DomNode& n = t.node(id);
  bool checkbox = n.tag == "checkbox";
  std::string tag = checkbox ? "input" : n.tag;
  out += '<';
  out += tag;
  if (checkbox) out += " type=\"checkbox\"";
  if (!n.classes.empty()) {
    out += " class=\"";
    for (std::size_t i = 0; i < n.classes.size(); ++i) {
      if (i) out += ' ';
      out += n.classes[i];
    }
    out += '"';
  }
  if (!n.html_id.empty()) {
    out += " id=\"";
    out += n.html_id;
    out += '"';
  }
  if (n.text.empty() && n.children.empty()) {
    out += "/>";
    return;
  }
  out += '>';
  for (std::size_t i = 0; i < n.text.size(); ++i) {
    if (i) out += ' ';
    out += n.text[i];
  }
  for (int c : n.children) serialize_node(t, c, out);
  out += "</";
  out += tag;
  out += '>';
}

}  // namespace

DomTree parse_html(std::string_view source, int max_doms) {
  return Parser(source, max_doms).run();
}

std::string serialize_html(const DomTree& tree) {
  std::string out;
  serialize_node(tree, tree.root(), out);
  return out;
}

std::string tree_to_json(const DomTree& tree) {
  nlohmann::json nodes = nlohmann::json::array();
  for (const auto& n : tree.nodes()) {
    nlohmann::json j{{"id", n.id},      {"tag", n.tag},
                     {"classes", n.classes}, {"text", n.text},
                     {"focused", n.focused}, {"tampered", n.tampered},
                     {"children", n.children}};
    if (n.parent) j["parent"] = *n.parent;
    if (!n.html_id.empty()) j["html_id"] = n.html_id;
    nodes.push_back(std::move(j));
  }
  return nlohmann::json{{"nodes", std::move(nodes)}}.dump();
}

DomTree tree_from_json(const std::string& json_text) {
  nlohmann::json doc = nlohmann::json::parse(json_text);
  std::vector<DomNode> nodes;
  for (const auto& j : doc.at("nodes")) {
    DomNode n;
    n.id = j.at("id").get<int>();
    n.tag = j.at("tag").get<std::string>();
    n.classes = j.at("classes").get<std::vector<std::string>>();
    n.text = j.at("text").get<std::vector<std::string>>();
    n.focused = j.at("focused").get<bool>();
    n.tampered = j.at("tampered").get<bool>();
    n.children = j.at("children").get<std::vector<int>>();
    if (j.contains("parent")) n.parent = j.at("parent").get<int>();
    if (j.contains("html_id")) n.html_id = j.at("html_id").get<std::string>();
    nodes.push_back(std::move(n));
  }
  return DomTree(std::move(nodes));
}

}  // namespace domq
