#include <algorithm>
#include <array>
#include <memory>
#include <string>
#include <vector>

#include "env.hpp"
#include "error.hpp"
#include "rng.hpp"

namespace domq {
namespace {

// Shared task lexicon. Kept common across tasks so embeddings learned on
// one task carry over to the others in multitask runs. Structural words
// (click, login, submit, next, back, ...) are deliberately absent.
const std::vector<std::string>& lexicon() {
  static const std::vector<std::string> v = {
      "apple", "river", "stone",  "cloud", "tiger", "lemon", "piano", "maple",
      "coral", "eagle", "amber",  "delta", "fern",  "gold",  "harbor", "iris",
      "jade",  "kite",  "lunar",  "mint",  "nova",  "oak",   "pearl", "quartz"};
  return v;
}

std::vector<std::string> sample_distinct(Rng& rng, int k,
                                         const std::vector<std::string>& exclude = {}) {
  std::vector<std::string> pool;
  for (const auto& w : lexicon())
    if (std::find(exclude.begin(), exclude.end(), w) == exclude.end()) pool.push_back(w);
  std::vector<std::string> out;
  for (int i = 0; i < k; ++i) {
    int j = rng.next_int(static_cast<int>(pool.size()));
    out.push_back(pool[j]);
    pool.erase(pool.begin() + j);
  }
  return out;
}

Rng task_rng(const std::string& name, std::uint64_t seed) {
  return Rng(hash_mix(fnv1a(name), seed));
}

// deterministic content stream keyed on the goal sentence; lets
// multi-page tasks rebuild hidden pages as pure functions of the state
Rng goal_rng(const Goal& g, std::string_view salt) {
  return Rng(hash_mix(fnv1a(g.sentence()), fnv1a(salt)));
}

bool single_text(const DomNode& n, const std::string& w) {
  return n.text.size() == 1 && n.text[0] == w;
}

StepResult no_op(const DomTree& s, int node) { return {with_focus(s, node), 0.0, false}; }

// ------------------------------------------------------------ click-button

class ClickButtonTask final : public Task {
 public:
  ClickButtonTask() { info_ = {kClickButton, "easy", 5000, 2, 3}; }

  std::pair<DomTree, Goal> sample(std::uint64_t seed) const override {
    Rng rng = task_rng(info_.name, seed);
    int k = 3 + rng.next_int(3);
    auto words = sample_distinct(rng, k);
    const std::string& target = words[rng.next_int(k)];
    std::string html = "<div>";
    for (const auto& w : words) html += "<button>" + w + "</button>";
    html += "</div>";
    return {parse_html(html), Goal{{"click", target}}};
  }

  StepResult transition(const DomTree& s, const Goal& g, const ActionTuple& a) const override {
    if (a.mode == Mode::type) return {with_typed(s, a.dom, g.tokens[a.token]), 0.0, false};
    const DomNode& n = s.node(a.dom);
    if (n.tag == "button") {
      bool hit = !n.tampered && single_text(n, g.tokens[1]);
      return {with_focus(s, a.dom), hit ? 1.0 : 0.0, true};
    }
    return no_op(s, a.dom);
  }

  ActionTuple oracle_action(const DomTree& s, const Goal& g) const override {
    for (const auto& n : s.nodes())
      if (n.tag == "button" && !n.tampered && single_text(n, g.tokens[1]))
        return {n.id, 0, Mode::click};
    return {s.root(), 0, Mode::click};
  }
};

// -------------------------------------------------------------- click-link

class ClickLinkTask final : public Task {
 public:
  ClickLinkTask() { info_ = {kClickLink, "easy", 5000, 2, 3}; }

  std::pair<DomTree, Goal> sample(std::uint64_t seed) const override {
    Rng rng = task_rng(info_.name, seed);
    int k = 3 + rng.next_int(3);
    auto words = sample_distinct(rng, k);
    const std::string& target = words[rng.next_int(k)];
    std::string html = "<div><ul>";
    for (const auto& w : words) html += "<li><a>" + w + "</a></li>";
    html += "</ul></div>";
    return {parse_html(html), Goal{{"click", "the", target, "link"}}};
  }

  StepResult transition(const DomTree& s, const Goal& g, const ActionTuple& a) const override {
    if (a.mode == Mode::type) return {with_typed(s, a.dom, g.tokens[a.token]), 0.0, false};
    const DomNode& n = s.node(a.dom);
    if (n.tag == "a") {
      bool hit = !n.tampered && single_text(n, g.tokens[2]);
      return {with_focus(s, a.dom), hit ? 1.0 : 0.0, true};
    }
    return no_op(s, a.dom);
  }

  ActionTuple oracle_action(const DomTree& s, const Goal& g) const override {
    for (const auto& n : s.nodes())
      if (n.tag == "a" && !n.tampered && single_text(n, g.tokens[2]))
        return {n.id, 0, Mode::click};
    return {s.root(), 0, Mode::click};
  }
};

// ----------------------------------------------------------- navigate-tree

// Two-level folder tree. The root page lists three folders; opening one
// shows its three leaves plus a back link. Folder contents are derived
// from the goal sentence, which keeps the transition pure.
class NavigateTreeTask final : public Task {
 public:
  NavigateTreeTask() { info_ = {kNavigateTree, "easy", 5000, 4, 3}; }

  std::pair<DomTree, Goal> sample(std::uint64_t seed) const override {
    Rng rng = task_rng(info_.name, seed);
    auto picks = sample_distinct(rng, 2);
    Goal goal{{"open", picks[0], "then", "click", picks[1]}};
    return {root_page(goal), goal};
  }

  StepResult transition(const DomTree& s, const Goal& g, const ActionTuple& a) const override {
    if (a.mode == Mode::type) return {with_typed(s, a.dom, g.tokens[a.token]), 0.0, false};
    const DomNode& n = s.node(a.dom);
    if (n.tag != "a") return no_op(s, a.dom);
    bool has_back = back_node(s) >= 0;
    if (!has_back) {
      // root page: open whichever folder the link currently names
      std::string f = n.text.empty() ? std::string() : n.text[0];
      return {folder_page(g, f), 0.0, false};
    }
    if (std::find(n.classes.begin(), n.classes.end(), "back") != n.classes.end())
      return {root_page(g), 0.0, false};
    bool hit = !n.tampered && single_text(n, g.tokens[4]);
    return {with_focus(s, a.dom), hit ? 1.0 : 0.0, true};
  }

  ActionTuple oracle_action(const DomTree& s, const Goal& g) const override {
    int back = back_node(s);
    if (back < 0) {
      for (const auto& n : s.nodes())
        if (n.tag == "a" && single_text(n, g.tokens[1])) return {n.id, 0, Mode::click};
    } else {
      for (const auto& n : s.nodes())
        if (n.tag == "a" && !n.tampered && single_text(n, g.tokens[4]))
          return {n.id, 0, Mode::click};
      return {back, 0, Mode::click};
    }
    return {s.root(), 0, Mode::click};
  }

 private:
  static int back_node(const DomTree& s) {
    for (const auto& n : s.nodes())
      if (n.tag == "a" &&
          std::find(n.classes.begin(), n.classes.end(), "back") != n.classes.end())
        return n.id;
    return -1;
  }

  static DomTree root_page(const Goal& g) {
    const std::string& folder = g.tokens[1];
    const std::string& leaf = g.tokens[4];
    Rng rng = goal_rng(g, "folders");
    auto fillers = sample_distinct(rng, 2, {folder, leaf});
    std::vector<std::string> folders = {folder, fillers[0], fillers[1]};
    // deterministic shuffle so the target is not always first
    for (int i = 2; i > 0; --i) std::swap(folders[i], folders[rng.next_int(i + 1)]);
    std::string html = "<div><ul>";
    for (const auto& f : folders) html += "<li><a>" + f + "</a></li>";
    html += "</ul></div>";
    return parse_html(html);
  }

  static DomTree folder_page(const Goal& g, const std::string& folder) {
    const std::string& target_folder = g.tokens[1];
    const std::string& leaf = g.tokens[4];
    Rng rng = goal_rng(g, "leaves:" + folder);
    std::vector<std::string> leaves;
    if (folder == target_folder) {
      auto fillers = sample_distinct(rng, 2, {target_folder, leaf});
      leaves = {leaf, fillers[0], fillers[1]};
    } else {
      leaves = sample_distinct(rng, 3, {target_folder, leaf});
    }
    for (int i = 2; i > 0; --i) std::swap(leaves[i], leaves[rng.next_int(i + 1)]);
    std::string html = "<div class=\"open\"><ul>";
    for (const auto& l : leaves) html += "<li><a>" + l + "</a></li>";
    html += "</ul><a class=\"back\">back</a></div>";
    return parse_html(html);
  }
};

// -------------------------------------------------------- click-checkboxes

// The checkbox inputs share every attribute; only their sibling labels
// differ. Selecting the right subset requires propagated context.
class ClickCheckboxesTask final : public Task {
 public:
  ClickCheckboxesTask() { info_ = {kClickCheckboxes, "medium", 50000, 8, 3}; }

  std::pair<DomTree, Goal> sample(std::uint64_t seed) const override {
    Rng rng = task_rng(info_.name, seed);
    auto words = sample_distinct(rng, 3);
    int mask = 1 + rng.next_int(7);
    std::string html = "<form><ul>";
    for (const auto& w : words)
      html += "<li><input type=\"checkbox\"/><label>" + w + "</label></li>";
    html += "</ul><button id=\"submit\">submit</button></form>";
    Goal goal;
    goal.tokens.push_back("select");
    for (int i = 0; i < 3; ++i)
      if (mask & (1 << i)) goal.tokens.push_back(words[i]);
    goal.tokens.push_back("then");
    goal.tokens.push_back("submit");
    return {parse_html(html), goal};
  }

  StepResult transition(const DomTree& s, const Goal& g, const ActionTuple& a) const override {
    if (a.mode == Mode::type) return {with_typed(s, a.dom, g.tokens[a.token]), 0.0, false};
    const DomNode& n = s.node(a.dom);
    if (n.tag == "checkbox") return {with_toggle(s, a.dom), 0.0, false};
    if (n.html_id == "submit") {
      bool ok = true;
      for (const auto& v : s.nodes()) {
        if (v.tag != "checkbox") continue;
        bool wanted = is_target(s, g, v.id);
        ok = ok && (v.tampered == wanted);
      }
      return {with_focus(s, a.dom), ok ? 1.0 : 0.0, true};
    }
    return no_op(s, a.dom);
  }

  ActionTuple oracle_action(const DomTree& s, const Goal& g) const override {
    for (const auto& n : s.nodes())
      if (n.tag == "checkbox" && n.tampered != is_target(s, g, n.id))
        return {n.id, 0, Mode::click};
    int submit = s.find_by_html_id("submit");
    return {submit >= 0 ? submit : s.root(), 0, Mode::click};
  }

 private:
  // target words sit between "select" and "then"
  static bool is_target(const DomTree& s, const Goal& g, int checkbox) {
    std::string label = label_of(s, checkbox);
    for (int j = 1; j < g.size() && g.tokens[j] != "then"; ++j)
      if (g.tokens[j] == label) return true;
    return false;
  }

  static std::string label_of(const DomTree& s, int checkbox) {
    const DomNode& cb = s.node(checkbox);
    if (!cb.parent) return {};
    for (int sib : s.node(*cb.parent).children) {
      const DomNode& l = s.node(sib);
      if (l.tag == "label" && !l.text.empty()) return l.text[0];
    }
    return {};
  }
};

// -------------------------------------------------------------- enter-text

class EnterTextTask final : public Task {
 public:
  EnterTextTask() { info_ = {kEnterText, "medium", 50000, 4, 3}; }

  std::pair<DomTree, Goal> sample(std::uint64_t seed) const override {
    Rng rng = task_rng(info_.name, seed);
    auto words = sample_distinct(rng, 1);
    Goal goal;
    if (rng.next_int(2) == 0)
      goal.tokens = {"enter", words[0], "then", "press", "go"};
    else
      goal.tokens = {"please", "enter", words[0], "then", "press", "go"};
    std::string html =
        "<form><label>entry</label><input id=\"field\"/>"
        "<button id=\"go\">go</button></form>";
    return {parse_html(html), goal};
  }

  StepResult transition(const DomTree& s, const Goal& g, const ActionTuple& a) const override {
    if (a.mode == Mode::type) return {with_typed(s, a.dom, g.tokens[a.token]), 0.0, false};
    const DomNode& n = s.node(a.dom);
    if (n.html_id == "go") {
      int field = s.find_by_html_id("field");
      bool ok = field >= 0 && single_text(s.node(field), target_word(g));
      return {with_focus(s, a.dom), ok ? 1.0 : 0.0, true};
    }
    return no_op(s, a.dom);
  }

  ActionTuple oracle_action(const DomTree& s, const Goal& g) const override {
    int field = s.find_by_html_id("field");
    int pos = target_pos(g);
    if (field >= 0 && !single_text(s.node(field), g.tokens[pos]))
      return {field, pos, Mode::type};
    int go = s.find_by_html_id("go");
    return {go >= 0 ? go : s.root(), 0, Mode::click};
  }

 private:
  static int target_pos(const Goal& g) {
    for (int j = 0; j + 1 < g.size(); ++j)
      if (g.tokens[j] == "enter") return j + 1;
    return 0;
  }
  static std::string target_word(const Goal& g) { return g.tokens[target_pos(g)]; }
};

// -------------------------------------------------------------- login-user

class LoginUserTask final : public Task {
 public:
  LoginUserTask() { info_ = {kLoginUser, "medium", 50000, 6, 3}; }

  std::pair<DomTree, Goal> sample(std::uint64_t seed) const override {
    Rng rng = task_rng(info_.name, seed);
    auto words = sample_distinct(rng, 2);
    std::string html =
        "<form><input class=\"username\" id=\"user\"/>"
        "<input class=\"password\" id=\"pass\"/>"
        "<button id=\"login\">login</button></form>";
    return {parse_html(html), Goal{{words[0], words[1], "login"}}};
  }

  StepResult transition(const DomTree& s, const Goal& g, const ActionTuple& a) const override {
    if (a.mode == Mode::type) return {with_typed(s, a.dom, g.tokens[a.token]), 0.0, false};
    const DomNode& n = s.node(a.dom);
    if (n.html_id == "login") {
      int user = s.find_by_html_id("user");
      int pass = s.find_by_html_id("pass");
      bool ok = user >= 0 && pass >= 0 && single_text(s.node(user), g.tokens[0]) &&
                single_text(s.node(pass), g.tokens[1]);
      return {with_focus(s, a.dom), ok ? 1.0 : 0.0, true};
    }
    return no_op(s, a.dom);
  }

  ActionTuple oracle_action(const DomTree& s, const Goal& g) const override {
    int user = s.find_by_html_id("user");
    int pass = s.find_by_html_id("pass");
    if (user >= 0 && !single_text(s.node(user), g.tokens[0])) return {user, 0, Mode::type};
    if (pass >= 0 && !single_text(s.node(pass), g.tokens[1])) return {pass, 1, Mode::type};
    int login = s.find_by_html_id("login");
    return {login >= 0 ? login : s.root(), 0, Mode::click};
  }
};

// ----------------------------------------------------------- search-engine

// Query page, then paginated results (three per page, next link). The
// result list is derived from the goal sentence; result links carry rank
// classes r1..r9 and the goal names the wanted rank as an ordinal.
class SearchEngineTask final : public Task {
 public:
  SearchEngineTask() { info_ = {kSearchEngine, "hard", 2000000, 10, 3}; }

  static constexpr int kResults = 9;
  static constexpr int kPerPage = 3;

  std::pair<DomTree, Goal> sample(std::uint64_t seed) const override {
    Rng rng = task_rng(info_.name, seed);
    auto words = sample_distinct(rng, 1);
    int k = 1 + rng.next_int(kResults);
    Goal goal{{"enter", words[0], "press", "search", "click", "the", ordinal(k), "result"}};
    return {query_page(), goal};
  }

  StepResult transition(const DomTree& s, const Goal& g, const ActionTuple& a) const override {
    if (a.mode == Mode::type) return {with_typed(s, a.dom, g.tokens[a.token]), 0.0, false};
    const DomNode& n = s.node(a.dom);
    bool on_query_page = s.find_by_html_id("q") >= 0;
    if (on_query_page) {
      if (n.html_id == "search") {
        int q = s.find_by_html_id("q");
        if (q >= 0 && single_text(s.node(q), g.tokens[1])) return {results_page(g, 1), 0.0, false};
      }
      return no_op(s, a.dom);
    }
    if (n.tag == "a") {
      int rank = rank_of(n);
      if (rank > 0) {
        bool hit = rank == wanted_rank(g);
        return {with_focus(s, a.dom), hit ? 1.0 : 0.0, true};
      }
      if (n.html_id == "next") {
        int page = page_of(s);
        if (page < pages()) return {results_page(g, page + 1), 0.0, false};
      }
    }
    return no_op(s, a.dom);
  }

  ActionTuple oracle_action(const DomTree& s, const Goal& g) const override {
    int q = s.find_by_html_id("q");
    if (q >= 0) {
      if (!single_text(s.node(q), g.tokens[1])) return {q, 1, Mode::type};
      return {s.find_by_html_id("search"), 0, Mode::click};
    }
    int want = wanted_rank(g);
    int want_page = (want + kPerPage - 1) / kPerPage;
    if (page_of(s) < want_page) return {s.find_by_html_id("next"), 0, Mode::click};
    for (const auto& n : s.nodes())
      if (n.tag == "a" && rank_of(n) == want) return {n.id, 0, Mode::click};
    return {s.root(), 0, Mode::click};
  }

 private:
  static constexpr int pages() { return kResults / kPerPage; }

  static std::string ordinal(int k) {
    static const std::array<const char*, 9> ord = {"1st", "2nd", "3rd", "4th", "5th",
                                                   "6th", "7th", "8th", "9th"};
    return ord[k - 1];
  }

  static int wanted_rank(const Goal& g) {
    for (const auto& tok : g.tokens)
      for (int k = 1; k <= kResults; ++k)
        if (tok == ordinal(k)) return k;
    return 1;
  }

  static int rank_of(const DomNode& n) {
    for (const auto& c : n.classes)
      if (c.size() >= 2 && c[0] == 'r') {
        int v = 0;
        for (std::size_t i = 1; i < c.size(); ++i) {
          if (c[i] < '0' || c[i] > '9') return -1;
          v = v * 10 + (c[i] - '0');
        }
        if (v >= 1 && v <= kResults) return v;
      }
    return -1;
  }

  static int page_of(const DomTree& s) {
    int min_rank = kResults + 1;
    for (const auto& n : s.nodes())
      if (n.tag == "a") {
        int r = rank_of(n);
        if (r > 0) min_rank = std::min(min_rank, r);
      }
    return (min_rank + kPerPage - 1) / kPerPage;
  }

  static DomTree query_page() {
    return parse_html(
        "<div><input id=\"q\"/><button id=\"search\">search</button></div>");
  }

  static DomTree results_page(const Goal& g, int page) {
    Rng rng = goal_rng(g, "results");
    auto titles = sample_distinct(rng, kResults, {g.tokens[1]});
    std::string html = "<div class=\"results\"><ul>";
    for (int j = 0; j < kPerPage; ++j) {
      int rank = (page - 1) * kPerPage + j + 1;
      html += "<li><a class=\"r" + std::to_string(rank) + "\">" + titles[rank - 1] +
              "</a></li>";
    }
    html += "</ul><a class=\"next\" id=\"next\">next</a></div>";
    return parse_html(html);
  }
};

}  // namespace

std::vector<std::string> builtin_task_names() {
  return {kClickButton, kClickLink,  kNavigateTree, kClickCheckboxes,
          kEnterText,   kLoginUser,  kSearchEngine};
}

std::shared_ptr<const Task> make_builtin_task(const std::string& name) {
  if (name == kClickButton) return std::make_shared<ClickButtonTask>();
  if (name == kClickLink) return std::make_shared<ClickLinkTask>();
  if (name == kNavigateTree) return std::make_shared<NavigateTreeTask>();
  if (name == kClickCheckboxes) return std::make_shared<ClickCheckboxesTask>();
  if (name == kEnterText) return std::make_shared<EnterTextTask>();
  if (name == kLoginUser) return std::make_shared<LoginUserTask>();
  if (name == kSearchEngine) return std::make_shared<SearchEngineTask>();
  return nullptr;
}

}  // namespace domq
