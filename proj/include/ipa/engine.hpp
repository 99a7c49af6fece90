#pragma once

#include <deque>
#include <functional>
#include <map>
#include <optional>
#include <random>
#include <set>
#include <sstream>
#include <stdexcept>
#include <string>
#include <tuple>
#include <vector>

#include "ipa/ir.hpp"

// Interprocedural dataflow solver over value contexts: a context is a
// (method, entry value) pair with its own IN/OUT tables and an exit value
// that only descends. Call sites look up or create the callee context for
// the entry value computed at the site, record a transition edge, and read
// the callee's current exit value; when an exit value later descends, every
// recorded caller site is re-enqueued. The same tabulation runs backward by
// swapping successor/predecessor and entry/exit roles.

namespace ipa {

enum class Direction { Forward, Backward };

struct CallResolution {
  std::vector<int> targets;  // callee method indices (no duplicates)
  bool isDefault = false;    // some target lies outside the program text
};

template <typename A>
struct Context {
  int id = -1;      // creation order
  int method = -1;  // index into Program::methods
  A entryValue;     // immutable context key (with method)
  A exitValue;      // starts at top, descends monotonically
  std::vector<A> in, out;  // per node; oriented by the run's Direction
};

// Operations a client supplies. Flow functions must be monotonic w.r.t.
// the order a ⊑ b iff meet(a,b)=a, and the set of values reachable from
// boundaryValue must be finite; the solver checks descent and aborts with
// a diagnostic if a recomputed value ascends.
template <typename A>
class AnalysisClient {
 public:
  virtual ~AnalysisClient() = default;

  virtual A topValue() = 0;
  virtual A boundaryValue(const Method& entryMethod) = 0;
  virtual A meet(const A& a, const A& b) = 0;
  virtual A copyValue(const A& v) { return v; }
  virtual bool valuesEqual(const A& a, const A& b) = 0;

  // Transfer for non-call nodes.
  virtual A normalFlow(const Context<A>& ctx, int node, const A& in) = 0;
  // Entry value of the callee context induced at a call site.
  virtual A callEntryFlow(const Context<A>& ctx, int node, int target, const A& in) = 0;
  // Caller-side value derived from the callee context's exit value.
  virtual A callExitFlow(const Context<A>& ctx, int node, int target, const A& exitValue) = 0;
  // Caller-local component that bypasses the callee.
  virtual A callLocalFlow(const Context<A>& ctx, int node, const A& in) = 0;
  // Call targets visible at the site given the current value.
  virtual CallResolution resolveTargets(const Context<A>& ctx, int node, const A& in) = 0;

  virtual std::string printValue(const A& v) = 0;

  // Called once before solving. revisit(ctx, node) re-enqueues a pair; clients
  // with analysis state outside the value lattice (e.g. a global static-field
  // graph) use it to reprocess dependents when that state changes.
  virtual void onSolveStart(std::function<void(int, int)> revisit) { (void)revisit; }
};

template <typename A>
struct AnalysisResult {
  const Program* program = nullptr;
  Direction direction = Direction::Forward;
  std::deque<Context<A>> contexts;                 // by id
  std::map<int, std::vector<int>> methodContexts;  // method -> ids, creation order
  // call-site transitions; a site can reach several callee contexts (several
  // targets, or refined entry values over time — edges are never removed)
  std::map<std::pair<int, int>, std::set<int>> transitions;
  std::map<int, std::set<std::pair<int, int>>> reverseTransitions;
  std::set<std::pair<int, int>> defaultSites;  // (ctx, node) with outside targets
  // meet over all of a method's contexts, per node
  std::map<int, std::vector<A>> mergedIn, mergedOut;
  unsigned long long steps = 0;  // worklist pops

  const std::vector<int>& contextsOf(int method) const {
    static const std::vector<int> none;
    auto it = methodContexts.find(method);
    return it == methodContexts.end() ? none : it->second;
  }

  // Values in CFG orientation: "before" is execution order regardless of the
  // analysis direction (for a backward analysis the solver's input at a node
  // is the value after it).
  const A& valueBefore(int ctx, int node) const {
    return direction == Direction::Forward ? contexts[ctx].in[node] : contexts[ctx].out[node];
  }
  const A& valueAfter(int ctx, int node) const {
    return direction == Direction::Forward ? contexts[ctx].out[node] : contexts[ctx].in[node];
  }
  bool hasMerged(int method) const { return mergedIn.count(method) != 0; }
  const A& mergedBefore(int method, int node) const {
    return direction == Direction::Forward ? mergedIn.at(method)[node] : mergedOut.at(method)[node];
  }
  const A& mergedAfter(int method, int node) const {
    return direction == Direction::Forward ? mergedOut.at(method)[node] : mergedIn.at(method)[node];
  }
};

struct SolveOptions {
  Direction direction = Direction::Forward;
  // When set, worklist picks are uniform over the pending set (seeded); the
  // default is newest-context-first, then reverse-postorder rank.
  std::optional<unsigned long long> randomSeed;
  unsigned long long maxSteps = 0;  // 0 = unlimited; exceeded -> runtime_error
};

template <typename A>
class Solver {
 public:
  Solver(const Program& p, AnalysisClient<A>& client, const SolveOptions& opts)
      : prog_(p), client_(client), opts_(opts) {
    if (opts.randomSeed) rng_.seed(*opts.randomSeed);
    res_.program = &prog_;
    res_.direction = opts_.direction;
    client_.onSolveStart([this](int ctx, int node) { enqueue(ctx, node); });
  }

  // Registers a context for (method, entryValue): exit value and all IN/OUT
  // slots start at top except IN at the processing entry, and every node is
  // enqueued. The pair must not already have a context.
  int addContext(int method, const A& entryValue) {
    for (int id : res_.contextsOf(method)) {
      if (client_.valuesEqual(res_.contexts[id].entryValue, entryValue))
        throw std::logic_error("context already exists for this entry value");
    }
    return initContext(method, entryValue);
  }

  size_t pendingCount() const { return pending_.size(); }
  const Context<A>& context(int id) const { return res_.contexts[id]; }

  // Solves to fixpoint from the seeded contexts (the program entry with the
  // client's boundary value, unless contexts were added explicitly).
  AnalysisResult<A> run() {
    if (res_.contexts.empty()) {
      initContext(prog_.entry, client_.boundaryValue(prog_.entryMethod()));
    }
    while (!empty()) {
      auto [ctx, node] = pop();
      ++res_.steps;
      if (opts_.maxSteps && res_.steps > opts_.maxSteps)
        throw std::runtime_error("worklist step budget exceeded");
      process(ctx, node);
    }
    computeMerged();
    return std::move(res_);
  }

 private:
  using Ctx = Context<A>;

  int procEntry(const Method& m) const {
    return opts_.direction == Direction::Forward ? m.entry : m.exit;
  }
  int procExit(const Method& m) const {
    return opts_.direction == Direction::Forward ? m.exit : m.entry;
  }
  const std::vector<int>& procSucc(const Method& m, int node) const {
    return opts_.direction == Direction::Forward ? m.nodes[node].succ : m.preds[node];
  }
  const std::vector<int>& procPred(const Method& m, int node) const {
    return opts_.direction == Direction::Forward ? m.preds[node] : m.nodes[node].succ;
  }
  int rankOf(const Method& m, int node) const {
    return opts_.direction == Direction::Forward ? m.orderFwd[node] : m.orderBwd[node];
  }

  int initContext(int method, const A& entryValue) {
    const Method& m = prog_.methods[method];
    Ctx ctx;
    ctx.id = static_cast<int>(res_.contexts.size());
    ctx.method = method;
    ctx.entryValue = client_.copyValue(entryValue);
    ctx.exitValue = client_.topValue();
    ctx.in.assign(m.nodes.size(), client_.topValue());
    ctx.out.assign(m.nodes.size(), client_.topValue());
    ctx.in[procEntry(m)] = client_.copyValue(entryValue);
    res_.contexts.push_back(std::move(ctx));
    res_.methodContexts[method].push_back(res_.contexts.back().id);
    for (int n = 0; n < static_cast<int>(m.nodes.size()); ++n) {
      enqueue(res_.contexts.back().id, n);
    }
    return res_.contexts.back().id;
  }

  int findOrCreateContext(int method, const A& entryValue) {
    for (int id : res_.contextsOf(method)) {
      if (client_.valuesEqual(res_.contexts[id].entryValue, entryValue)) return id;
    }
    return initContext(method, entryValue);
  }

  void checkDescent(const A& updated, const A& previous, const Method& m, int node,
                    const char* slot) {
    if (!client_.valuesEqual(client_.meet(updated, previous), updated)) {
      throw std::runtime_error("monotonicity violated: " + std::string(slot) + " ascends at '" +
                               m.ref().str() + "." + m.nodes[node].label + "'");
    }
  }

  void process(int ctxId, int node) {
    const Method& m = prog_.methods[res_.contexts[ctxId].method];
    {
      Ctx& ctx = res_.contexts[ctxId];
      if (node != procEntry(m) && !procPred(m, node).empty()) {
        A in = client_.topValue();
        for (int p : procPred(m, node)) in = client_.meet(in, ctx.out[p]);
        checkDescent(in, ctx.in[node], m, node, "IN");
        ctx.in[node] = std::move(in);
      }
    }

    A out;
    if (isCall(m.nodes[node].stmt)) {
      // Copy IN: resolving/creating callee contexts may reallocate the deque's
      // growth bookkeeping and recursion may touch this context's tables.
      A in = client_.copyValue(res_.contexts[ctxId].in[node]);
      CallResolution res = client_.resolveTargets(res_.contexts[ctxId], node, in);
      if (res.isDefault) res_.defaultSites.insert({ctxId, node});
      out = client_.topValue();
      for (int target : res.targets) {
        A entry = client_.callEntryFlow(res_.contexts[ctxId], node, target, in);
        int callee = findOrCreateContext(target, entry);
        res_.transitions[{ctxId, node}].insert(callee);
        res_.reverseTransitions[callee].insert({ctxId, node});
        A back = client_.callExitFlow(res_.contexts[ctxId], node, target,
                                      res_.contexts[callee].exitValue);
        out = client_.meet(out, back);
      }
      out = client_.meet(out, client_.callLocalFlow(res_.contexts[ctxId], node, in));
    } else {
      out = client_.normalFlow(res_.contexts[ctxId], node, res_.contexts[ctxId].in[node]);
    }

    Ctx& ctx = res_.contexts[ctxId];
    if (!client_.valuesEqual(out, ctx.out[node])) {
      checkDescent(out, ctx.out[node], m, node, "OUT");
      ctx.out[node] = std::move(out);
      for (int s : procSucc(m, node)) enqueue(ctxId, s);
    }
    if (node == procExit(m) && !client_.valuesEqual(ctx.out[node], ctx.exitValue)) {
      ctx.exitValue = client_.copyValue(ctx.out[node]);
      auto it = res_.reverseTransitions.find(ctxId);
      if (it != res_.reverseTransitions.end()) {
        for (auto [callerCtx, callNode] : it->second) enqueue(callerCtx, callNode);
      }
    }
  }

  void computeMerged() {
    for (const auto& [method, ids] : res_.methodContexts) {
      const Method& m = prog_.methods[method];
      std::vector<A> mi(m.nodes.size(), client_.topValue());
      std::vector<A> mo(m.nodes.size(), client_.topValue());
      for (int id : ids) {
        for (size_t n = 0; n < m.nodes.size(); ++n) {
          mi[n] = client_.meet(mi[n], res_.contexts[id].in[n]);
          mo[n] = client_.meet(mo[n], res_.contexts[id].out[n]);
        }
      }
      res_.mergedIn[method] = std::move(mi);
      res_.mergedOut[method] = std::move(mo);
    }
  }

  // ---- worklist ----
  void enqueue(int ctx, int node) {
    if (!pending_.insert({ctx, node}).second) return;
    if (opts_.randomSeed) {
      bag_.push_back({ctx, node});
    } else {
      const Method& m = prog_.methods[res_.contexts[ctx].method];
      queue_.insert({-ctx, rankOf(m, node), node});
    }
  }

  bool empty() const { return pending_.empty(); }

  std::pair<int, int> pop() {
    if (opts_.randomSeed) {
      // uniform over pending entries; stale duplicates were filtered on insert
      std::uniform_int_distribution<size_t> pick(0, bag_.size() - 1);
      size_t i = pick(rng_);
      std::swap(bag_[i], bag_.back());
      auto item = bag_.back();
      bag_.pop_back();
      pending_.erase(item);
      return item;
    }
    auto it = queue_.begin();
    auto [negCtx, rank, node] = *it;
    (void)rank;
    queue_.erase(it);
    std::pair<int, int> item{-negCtx, node};
    pending_.erase(item);
    return item;
  }

  const Program& prog_;
  AnalysisClient<A>& client_;
  SolveOptions opts_;
  AnalysisResult<A> res_;
  std::set<std::pair<int, int>> pending_;
  std::set<std::tuple<int, int, int>> queue_;  // (-ctx, rank, node)
  std::vector<std::pair<int, int>> bag_;
  std::mt19937_64 rng_;
};

template <typename A>
AnalysisResult<A> solve(const Program& p, AnalysisClient<A>& client,
                        const SolveOptions& opts = {}) {
  return Solver<A>(p, client, opts).run();
}

// ---- solution export --------------------------------------------------------

enum class RecordScope { Full, MergedOnly };

// One line per (context, node) — `ctx=<id> method=<m> node=<label> in=<v>
// out=<v>` — plus per-method `ctx=merged` lines; in/out are CFG-oriented.
// MergedOnly emits just the merged lines (stable across worklist orders;
// the full context list can include sites' transient entry values).
template <typename A>
std::string exportRecords(const AnalysisResult<A>& r, AnalysisClient<A>& client,
                          RecordScope scope = RecordScope::Full) {
  std::ostringstream os;
  const Program& p = *r.program;
  if (scope == RecordScope::Full) {
    for (const Context<A>& ctx : r.contexts) {
      const Method& m = p.methods[ctx.method];
      for (int n = 0; n < static_cast<int>(m.nodes.size()); ++n) {
        os << "ctx=" << ctx.id << " method=" << m.ref().str() << " node=" << m.nodes[n].label
           << " in=" << client.printValue(r.valueBefore(ctx.id, n))
           << " out=" << client.printValue(r.valueAfter(ctx.id, n)) << "\n";
      }
    }
  }
  for (const auto& [method, _] : r.mergedIn) {
    const Method& m = p.methods[method];
    for (int n = 0; n < static_cast<int>(m.nodes.size()); ++n) {
      os << "ctx=merged method=" << m.ref().str() << " node=" << m.nodes[n].label
         << " in=" << client.printValue(r.mergedBefore(method, n))
         << " out=" << client.printValue(r.mergedAfter(method, n)) << "\n";
    }
  }
  return os.str();
}

// Context-transition diagram in DOT: one node per context labeled
// "X<id>: <method> [<entry> / <exit>]", one edge per recorded transition
// labeled by the call-site node; sites with outside targets get a dashed
// edge to a synthetic box.
template <typename A>
std::string exportTransitionsDot(const AnalysisResult<A>& r, AnalysisClient<A>& client) {
  std::ostringstream os;
  const Program& p = *r.program;
  os << "digraph transitions {\n";
  for (const Context<A>& ctx : r.contexts) {
    const Method& m = p.methods[ctx.method];
    os << "  X" << ctx.id << " [label=\"X" << ctx.id << ": " << m.ref().str() << " ["
       << client.printValue(ctx.entryValue) << " / " << client.printValue(ctx.exitValue)
       << "]\"];\n";
  }
  if (!r.defaultSites.empty()) {
    os << "  outside [shape=box, label=\"outside program\"];\n";
  }
  for (const auto& [site, callees] : r.transitions) {
    const Method& m = p.methods[r.contexts[site.first].method];
    for (int callee : callees) {
      os << "  X" << site.first << " -> X" << callee << " [label=\"" << m.nodes[site.second].label
         << "\"];\n";
    }
  }
  for (const auto& [ctxId, node] : r.defaultSites) {
    const Method& m = p.methods[r.contexts[ctxId].method];
    os << "  X" << ctxId << " -> outside [label=\"" << m.nodes[node].label
       << "\", style=dashed];\n";
  }
  os << "}\n";
  return os.str();
}

}  // namespace ipa
