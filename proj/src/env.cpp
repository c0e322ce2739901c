#include "env.hpp"

#include <algorithm>
#include <fstream>
#include <map>
#include <mutex>
#include <sstream>

#include "error.hpp"
#include "json.hpp"
#include "rng.hpp"

namespace domq {

Env::Env(std::shared_ptr<const Task> task, std::uint64_t seed) : task_(std::move(task)) {
  reset(seed);
}

std::pair<DomTree, Goal> Env::reset(std::uint64_t seed) {
  auto [tree, goal] = task_->sample(seed);
  state_ = std::move(tree);
  goal_ = std::move(goal);
  steps_ = 0;
  done_ = false;
  return {state_, goal_};
}

StepResult Env::step(const ActionTuple& a) {
  if (done_) throw Error(ErrorCode::invalid_argument, "step() on a finished episode");
  if (a.dom < 0 || a.dom >= state_.size())
    throw InvalidAction("a_dom " + std::to_string(a.dom) + " out of range for " +
                        std::to_string(state_.size()) + " nodes");
  if (a.token < 0 || a.token >= goal_.size())
    throw InvalidAction("a_token " + std::to_string(a.token) + " out of range for " +
                        std::to_string(goal_.size()) + " tokens");

  StepResult r = task_->transition(state_, goal_, a);
  if (r.reward != 0.0 && r.reward != 1.0)
    throw Error(ErrorCode::internal, "task produced a non-binary reward");
  if (r.reward == 1.0 && !r.done)
    throw Error(ErrorCode::internal, "task produced reward without termination");
  ++steps_;
  if (!r.done && steps_ >= task_->info().max_episode_steps) {
    r.done = true;
    r.reward = 0.0;
  }
  state_ = r.next_state;
  done_ = r.done;
  return r;
}

DomTree with_focus(DomTree t, int node) {
  for (int i = 0; i < t.size(); ++i) t.node(i).focused = false;
  t.node(node).focused = true;
  return t;
}

DomTree with_toggle(DomTree t, int node) {
  t = with_focus(std::move(t), node);
  t.node(node).tampered = !t.node(node).tampered;
  return t;
}

DomTree with_typed(DomTree t, int node, const std::string& token) {
  t.node(node).text = {token};
  t.node(node).tampered = true;
  return t;
}

// ------------------------------------------------------------- registry

namespace {

std::mutex g_custom_mutex;
std::vector<std::shared_ptr<const Task>>& custom_tasks() {
  static std::vector<std::shared_ptr<const Task>> v;
  return v;
}

}  // namespace

// defined in tasks.cpp
std::shared_ptr<const Task> make_builtin_task(const std::string& name);
std::vector<std::string> builtin_task_names();

std::vector<TaskInfo> registry() {
  std::vector<TaskInfo> out;
  for (const auto& name : builtin_task_names()) out.push_back(make_task(name)->info());
  std::lock_guard<std::mutex> lock(g_custom_mutex);
  for (const auto& t : custom_tasks()) out.push_back(t->info());
  return out;
}

void register_task(std::shared_ptr<const Task> task) {
  std::lock_guard<std::mutex> lock(g_custom_mutex);
  custom_tasks().push_back(std::move(task));
}

std::shared_ptr<const Task> make_task(const std::string& name) {
  if (auto t = make_builtin_task(name)) return t;
  std::lock_guard<std::mutex> lock(g_custom_mutex);
  for (const auto& t : custom_tasks())
    if (t->info().name == name) return t;
  throw UnknownTask(name);
}

// --------------------------------------------------- JSON template tasks

namespace {

// whitespace split that keeps {slot} holes intact
std::vector<std::string> split_template(const std::string& s) {
  std::vector<std::string> out;
  std::istringstream ss(s);
  std::string tok;
  while (ss >> tok) out.push_back(tok);
  return out;
}

bool is_hole(const std::string& tok) {
  return tok.size() > 2 && tok.front() == '{' && tok.back() == '}';
}

// Single-page task described by a task-spec document: a page template
// with slots filled from a lexicon, a goal template over those slots, and
// one of a small set of success predicates.
class TemplateTask final : public Task {
 public:
  struct Field {
    std::string html_id;
    std::string slot;
    int goal_pos = -1;
  };

  void set_info(TaskInfo info) { info_ = std::move(info); }

  std::vector<std::string> lexicon;
  std::string page_template;
  std::vector<std::string> page_slots;      // filled with distinct lexicon draws
  std::vector<std::string> goal_template;   // whitespace tokens; {slot} entries are holes
  std::string target_slot;                  // goal hole the predicate reads
  std::vector<std::string> target_choices;  // page slots the target is drawn from
  std::string predicate;                    // "click_text" | "submit_fields"
  int target_goal_pos = -1;
  std::string submit_html_id;
  std::vector<Field> fields;

  std::pair<DomTree, Goal> sample(std::uint64_t seed) const override {
    Rng rng(hash_mix(fnv1a(info_.name), seed));
    std::vector<std::string> pool = lexicon;
    std::map<std::string, std::string> fill;
    for (const auto& slot : page_slots) {
      if (pool.empty()) throw Error(ErrorCode::invalid_config, "lexicon too small");
      int i = rng.next_int(static_cast<int>(pool.size()));
      fill[slot] = pool[i];
      pool.erase(pool.begin() + i);
    }
    if (!target_choices.empty()) {
      const auto& slot = target_choices[rng.next_int(static_cast<int>(target_choices.size()))];
      fill[target_slot] = fill.at(slot);
    }
    std::string html = page_template;
    for (const auto& [slot, word] : fill) {
      std::string hole = "{" + slot + "}";
      for (std::size_t p; (p = html.find(hole)) != std::string::npos;)
        html.replace(p, hole.size(), word);
    }
    Goal goal;
    for (const auto& tok : goal_template)
      goal.tokens.push_back(is_hole(tok) ? fill.at(tok.substr(1, tok.size() - 2)) : tok);
    return {parse_html(html), goal};
  }

  StepResult transition(const DomTree& s, const Goal& g, const ActionTuple& a) const override {
    if (a.mode == Mode::type)
      return {with_typed(s, a.dom, g.tokens[a.token]), 0.0, false};
    const DomNode& n = s.node(a.dom);
    if (n.tag == "checkbox") return {with_toggle(s, a.dom), 0.0, false};
    if (predicate == "click_text" && (n.tag == "button" || n.tag == "a")) {
      bool hit = !n.tampered && n.text == std::vector<std::string>{g.tokens[target_goal_pos]};
      return {with_focus(s, a.dom), hit ? 1.0 : 0.0, true};
    }
    if (predicate == "submit_fields" && !n.html_id.empty() && n.html_id == submit_html_id) {
      bool ok = true;
      for (const auto& f : fields) {
        int id = s.find_by_html_id(f.html_id);
        ok = ok && id >= 0 &&
             s.node(id).text == std::vector<std::string>{g.tokens[f.goal_pos]};
      }
      return {with_focus(s, a.dom), ok ? 1.0 : 0.0, true};
    }
    return {with_focus(s, a.dom), 0.0, false};
  }

  ActionTuple oracle_action(const DomTree& s, const Goal& g) const override {
    if (predicate == "click_text") {
      for (const auto& n : s.nodes())
        if ((n.tag == "button" || n.tag == "a") && !n.tampered &&
            n.text == std::vector<std::string>{g.tokens[target_goal_pos]})
          return {n.id, 0, Mode::click};
    } else {
      for (const auto& f : fields) {
        int id = s.find_by_html_id(f.html_id);
        if (id >= 0 && s.node(id).text != std::vector<std::string>{g.tokens[f.goal_pos]})
          return {id, f.goal_pos, Mode::type};
      }
      int submit = s.find_by_html_id(submit_html_id);
      if (submit >= 0) return {submit, 0, Mode::click};
    }
    return {s.root(), 0, Mode::click};
  }
};

}  // namespace

std::shared_ptr<const Task> load_task_json(const std::string& json_text) {
  nlohmann::json doc = nlohmann::json::parse(json_text);
  auto t = std::make_shared<TemplateTask>();
  TaskInfo info;
  info.name = doc.at("name").get<std::string>();
  info.difficulty = doc.value("difficulty", std::string("easy"));
  info.budget = doc.value("budget", static_cast<long long>(5000));
  info.max_episode_steps = doc.at("max_episode_steps").get<int>();
  info.msg_steps = doc.value("msg_steps", 3);
  t->set_info(info);

  t->lexicon = doc.at("lexicon").get<std::vector<std::string>>();
  t->page_template = doc.at("page").get<std::string>();
  t->page_slots = doc.value("slots", std::vector<std::string>{});
  t->goal_template = split_template(doc.at("goal").get<std::string>());

  const auto& pred = doc.at("predicate");
  t->predicate = pred.at("kind").get<std::string>();
  if (t->predicate == "click_text") {
    t->target_slot = pred.at("target_slot").get<std::string>();
    t->target_choices = pred.value("choice_of", t->page_slots);
  } else if (t->predicate == "submit_fields") {
    t->submit_html_id = pred.at("submit_id").get<std::string>();
    for (const auto& f : pred.at("fields"))
      t->fields.push_back(
          {f.at("id").get<std::string>(), f.at("slot").get<std::string>(), -1});
  } else {
    throw Error(ErrorCode::invalid_config, "unknown predicate kind: " + t->predicate);
  }

  for (std::size_t j = 0; j < t->goal_template.size(); ++j) {
    const std::string& tok = t->goal_template[j];
    if (!is_hole(tok)) continue;
    std::string slot = tok.substr(1, tok.size() - 2);
    if (slot == t->target_slot) t->target_goal_pos = static_cast<int>(j);
    for (auto& f : t->fields)
      if (slot == f.slot) f.goal_pos = static_cast<int>(j);
  }
  if (t->predicate == "click_text" && t->target_goal_pos < 0)
    throw Error(ErrorCode::invalid_config, "goal template lacks the target slot");
  for (const auto& f : t->fields)
    if (f.goal_pos < 0)
      throw Error(ErrorCode::invalid_config, "goal template lacks slot for field " + f.html_id);

  // fail fast on an unusable page template
  t->sample(0);
  return t;
}

void register_task_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw Error(ErrorCode::io_error, "cannot open task file: " + path);
  std::stringstream ss;
  ss << in.rdbuf();
  register_task(load_task_json(ss.str()));
}

}  // namespace domq
