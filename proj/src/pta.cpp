#include "ipa/pta.hpp"

#include <algorithm>
#include <deque>
#include <sstream>
#include <variant>

namespace ipa {

namespace {

PtSet getVar(const PtGraph& g, const std::string& var) {
  auto it = g.varEdges.find(var);
  return it == g.varEdges.end() ? PtSet{} : it->second;
}

// Strong update; empty sets are never stored.
void setVar(PtGraph& g, const std::string& var, PtSet values) {
  if (values.empty()) {
    g.varEdges.erase(var);
  } else {
    g.varEdges[var] = std::move(values);
  }
}

// Heap edges never point at NULL: a stored null is a dropped edge, and loads
// of never-stored fields read as pointing nowhere.
PtSet heapValues(PtSet values) {
  values.erase(PtNode::null());
  return values;
}

bool unionInto(PtSet& dst, const PtSet& src) {
  size_t before = dst.size();
  dst.insert(src.begin(), src.end());
  return dst.size() != before;
}

const std::vector<std::string>* callArgs(const Statement& s) {
  if (const auto* sc = std::get_if<StaticCall>(&s)) return &sc->args;
  if (const auto* vc = std::get_if<VirtualCall>(&s)) return &vc->args;
  return nullptr;
}

PtSet rootsOf(const PtGraph& g) {
  PtSet roots;
  for (const auto& [var, targets] : g.varEdges) roots.insert(targets.begin(), targets.end());
  return roots;
}

// Fields declared by klass and its superclasses.
std::vector<std::string> allFields(const Program& p, const std::string& klass) {
  std::vector<std::string> fields;
  const ClassDef* c = p.findClass(klass);
  while (c) {
    fields.insert(fields.end(), c->fields.begin(), c->fields.end());
    c = c->super ? p.findClass(*c->super) : nullptr;
  }
  return fields;
}

// Restriction of g's heap to edges whose source is reachable from roots.
void copyReachableHeap(const PtGraph& g, const PtSet& roots, PtGraph& out) {
  PtSet reach = reachableFrom(g, roots);
  for (const auto& [edge, targets] : g.heapEdges) {
    if (reach.count(edge.first)) out.heapEdges[edge] = targets;
  }
}

}  // namespace

PtSet reachableFrom(const PtGraph& g, const PtSet& roots) {
  PtSet seen = roots;
  std::deque<PtNode> frontier(roots.begin(), roots.end());
  while (!frontier.empty()) {
    PtNode o = frontier.front();
    frontier.pop_front();
    if (!o.isSite()) continue;
    for (auto it = g.heapEdges.lower_bound({o, ""});
         it != g.heapEdges.end() && it->first.first == o; ++it) {
      for (const PtNode& t : it->second) {
        if (seen.insert(t).second) frontier.push_back(t);
      }
    }
  }
  return seen;
}

void dropUnreachableHeap(PtGraph& g, const PtSet& extraRoots) {
  PtSet roots = rootsOf(g);
  roots.insert(extraRoots.begin(), extraRoots.end());
  PtSet reach = reachableFrom(g, roots);
  for (auto it = g.heapEdges.begin(); it != g.heapEdges.end();) {
    if (reach.count(it->first.first)) {
      ++it;
    } else {
      it = g.heapEdges.erase(it);
    }
  }
}

std::string printPtNode(const PtNode& n) {
  switch (n.kind) {
    case PtNode::Kind::Summary: return "BOT";
    case PtNode::Kind::Null: return "null";
    case PtNode::Kind::Site: return n.label;
  }
  return "?";
}

namespace {

std::string printSet(const PtSet& s) {
  std::string out = "{";
  bool first = true;
  for (const PtNode& n : s) {
    if (!first) out += ",";
    out += printPtNode(n);
    first = false;
  }
  return out + "}";
}

}  // namespace

std::string printPointsTo(const PtGraph& g) {
  std::ostringstream os;
  for (const auto& [var, targets] : g.varEdges) {
    os << var << " -> " << printSet(targets) << "\n";
  }
  for (const auto& [edge, targets] : g.heapEdges) {
    os << printPtNode(edge.first) << "." << edge.second << " -> " << printSet(targets) << "\n";
  }
  return os.str();
}

PtGraph PointsToAnalysis::meet(const PtGraph& a, const PtGraph& b) {
  PtGraph r = a;
  for (const auto& [var, targets] : b.varEdges) r.varEdges[var].insert(targets.begin(), targets.end());
  for (const auto& [edge, targets] : b.heapEdges) r.heapEdges[edge].insert(targets.begin(), targets.end());
  return r;
}

void PointsToAnalysis::onSolveStart(std::function<void(int, int)> revisit) {
  global_ = {};
  staticReaders_.clear();
  revisit_ = std::move(revisit);
}

void PointsToAnalysis::exportToGlobal(const std::string& klass, const std::string& field,
                                      const PtSet& values, const PtGraph& g) {
  PtSet stored = heapValues(values);
  bool grew = false;
  if (!stored.empty()) grew |= unionInto(global_.staticEdges[{klass, field}], stored);
  // everything reachable from the stored objects escapes with them
  for (const PtNode& o : reachableFrom(g, stored)) {
    if (!o.isSite()) continue;
    for (auto it = g.heapEdges.lower_bound({o, ""});
         it != g.heapEdges.end() && it->first.first == o; ++it) {
      grew |= unionInto(global_.heapEdges[it->first], it->second);
    }
  }
  if (grew && revisit_) {
    for (auto [ctx, node] : staticReaders_) revisit_(ctx, node);
  }
}

PtGraph PointsToAnalysis::normalFlow(const Context<PtGraph>& ctx, int node, const PtGraph& in) {
  const Method& m = methodOf(ctx);
  const Statement& s = m.nodes[node].stmt;
  PtGraph g = in;
  std::visit(
      [&](const auto& st) {
        using T = std::decay_t<decltype(st)>;
        if constexpr (std::is_same_v<T, Copy>) {
          setVar(g, st.lhs, getVar(in, st.rhs));
        } else if constexpr (std::is_same_v<T, NewObject>) {
          setVar(g, st.lhs, {PtNode::site(ctx.method, m.nodes[node].label)});
        } else if constexpr (std::is_same_v<T, NullAssign>) {
          setVar(g, st.lhs, {PtNode::null()});
        } else if constexpr (std::is_same_v<T, LoadField>) {
          PtSet out;
          for (const PtNode& o : getVar(in, st.base)) {
            if (o.kind == PtNode::Kind::Summary) {
              out.insert(o);
            } else if (o.isSite()) {
              auto it = in.heapEdges.find({o, st.field});
              if (it != in.heapEdges.end()) out.insert(it->second.begin(), it->second.end());
            }
            // null bases fault concretely; that path contributes nothing
          }
          setVar(g, st.lhs, std::move(out));
        } else if constexpr (std::is_same_v<T, StoreField>) {
          PtSet values = heapValues(getVar(in, st.rhs));
          if (!values.empty()) {
            for (const PtNode& o : getVar(in, st.base)) {
              if (o.isSite()) g.heapEdges[{o, st.field}].insert(values.begin(), values.end());
            }
          }
        } else if constexpr (std::is_same_v<T, CastRef>) {
          PtSet out;
          std::set<std::string> compatible = subtypes(prog_, st.klass);
          for (const PtNode& o : getVar(in, st.rhs)) {
            if (!o.isSite()) {
              out.insert(o);  // SUMMARY may be anything; null casts succeed
            } else if (auto k = prog_.siteClass(o.method, o.label); k && compatible.count(*k)) {
              out.insert(o);
            }
          }
          setVar(g, st.lhs, std::move(out));
        } else if constexpr (std::is_same_v<T, StaticLoad>) {
          staticReaders_.insert({ctx.id, node});
          PtSet values{PtNode::null()};  // statics are null until stored
          auto it = global_.staticEdges.find({st.klass, st.field});
          if (it != global_.staticEdges.end()) values.insert(it->second.begin(), it->second.end());
          // pull the loaded objects' structure out of the global graph
          PtSet seen = values;
          std::deque<PtNode> frontier(values.begin(), values.end());
          while (!frontier.empty()) {
            PtNode o = frontier.front();
            frontier.pop_front();
            if (!o.isSite()) continue;
            for (const auto* heap : {&global_.heapEdges, &g.heapEdges}) {
              for (auto eit = heap->lower_bound({o, ""});
                   eit != heap->end() && eit->first.first == o; ++eit) {
                if (heap == &global_.heapEdges) {
                  g.heapEdges[eit->first].insert(eit->second.begin(), eit->second.end());
                }
                for (const PtNode& t : eit->second) {
                  if (seen.insert(t).second) frontier.push_back(t);
                }
              }
            }
          }
          setVar(g, st.lhs, std::move(values));
        } else if constexpr (std::is_same_v<T, StaticStore>) {
          exportToGlobal(st.klass, st.field, getVar(in, st.rhs), in);
        } else if constexpr (std::is_same_v<T, Return>) {
          setVar(g, kRetVar, getVar(in, st.var));
        } else if constexpr (std::is_same_v<T, ConstAssign> || std::is_same_v<T, Neg> ||
                             std::is_same_v<T, BinOp>) {
          setVar(g, st.lhs, {});  // scalar results carry no points-to facts
        }
        // Nop, Goto, Branch: identity
      },
      s);
  dropUnreachableHeap(g, rootsOf(ctx.entryValue));
  return g;
}

PtGraph PointsToAnalysis::callEntryFlow(const Context<PtGraph>& ctx, int node, int target,
                                        const PtGraph& in) {
  const std::vector<std::string>* args = callArgs(methodOf(ctx).nodes[node].stmt);
  const Method& callee = prog_.methods[target];
  PtGraph entry;
  size_t n = std::min(args->size(), callee.params.size());
  for (size_t i = 0; i < n; ++i) setVar(entry, callee.params[i], getVar(in, (*args)[i]));
  copyReachableHeap(in, rootsOf(entry), entry);
  return entry;
}

PtGraph PointsToAnalysis::callExitFlow(const Context<PtGraph>& ctx, int node, int target,
                                       const PtGraph& exitValue) {
  const Statement& s = methodOf(ctx).nodes[node].stmt;
  PtGraph out;
  setVar(out, definedVar(s), getVar(exitValue, kRetVar));
  // the caller sees the callee's final view of the returned object and of
  // everything the arguments reach
  PtSet roots = getVar(exitValue, kRetVar);
  const PtGraph& atCall = ctx.in[node];
  for (const std::string& arg : *callArgs(s)) {
    PtSet argTargets = getVar(atCall, arg);
    roots.insert(argTargets.begin(), argTargets.end());
  }
  (void)target;
  copyReachableHeap(exitValue, roots, out);
  return out;
}

PtGraph PointsToAnalysis::callLocalFlow(const Context<PtGraph>& ctx, int node, const PtGraph& in) {
  const Statement& s = methodOf(ctx).nodes[node].stmt;
  PtGraph out = in;
  out.varEdges.erase(definedVar(s));
  if (resolveTargets(ctx, node, in).isDefault) {
    // unknown callee: it returns anything and may overwrite every field of
    // every object the arguments (and receiver) reach
    setVar(out, definedVar(s), {PtNode::summary()});
    PtSet roots;
    for (const std::string& v : usedVars(s)) {
      PtSet targets = getVar(in, v);
      roots.insert(targets.begin(), targets.end());
    }
    for (const PtNode& o : reachableFrom(in, roots)) {
      if (!o.isSite()) continue;
      if (auto klass = prog_.siteClass(o.method, o.label)) {
        for (const std::string& f : allFields(prog_, *klass)) {
          out.heapEdges[{o, f}].insert(PtNode::summary());
        }
      }
    }
    return out;
  }
  // known callees: the argument-reachable heap travels through the callee
  // and comes back via call-exit; only the rest stays caller-local
  PtSet argRoots;
  for (const std::string& arg : *callArgs(s)) {
    PtSet targets = getVar(in, arg);
    argRoots.insert(targets.begin(), targets.end());
  }
  PtSet reach = reachableFrom(in, argRoots);
  for (auto it = out.heapEdges.begin(); it != out.heapEdges.end();) {
    if (reach.count(it->first.first)) {
      it = out.heapEdges.erase(it);
    } else {
      ++it;
    }
  }
  return out;
}

CallResolution PointsToAnalysis::resolveTargets(const Context<PtGraph>& ctx, int node,
                                                const PtGraph& in) {
  const Statement& s = methodOf(ctx).nodes[node].stmt;
  CallResolution res;
  if (const auto* sc = std::get_if<StaticCall>(&s)) {
    auto idx = prog_.findMethod(sc->target);
    if (idx && prog_.methods[*idx].params.size() == sc->args.size()) {
      res.targets.push_back(*idx);
    } else {
      res.isDefault = true;
    }
    return res;
  }
  const auto& vc = std::get<VirtualCall>(s);
  std::set<int> targets;
  for (const PtNode& o : getVar(in, vc.receiver)) {
    if (o.kind == PtNode::Kind::Summary) {
      res.isDefault = true;
    } else if (o.isSite()) {
      auto klass = prog_.siteClass(o.method, o.label);
      if (!klass) continue;
      try {
        int t = lookupDispatch(prog_, *klass, vc.method);
        if (prog_.methods[t].params.size() == vc.args.size()) targets.insert(t);
      } catch (const std::out_of_range&) {
        // the receiver's hierarchy does not declare the method: that path
        // faults concretely and contributes no target
      }
    }
    // null receivers fault; a set that is only {null} resolves to no targets
  }
  res.targets.assign(targets.begin(), targets.end());
  return res;
}

std::string PointsToAnalysis::printValue(const PtGraph& v) {
  if (v.varEdges.empty() && v.heapEdges.empty()) return "{}";
  std::string out;
  for (const auto& [var, targets] : v.varEdges) {
    if (!out.empty()) out += " ";
    out += var + "->" + printSet(targets);
  }
  for (const auto& [edge, targets] : v.heapEdges) {
    if (!out.empty()) out += " ";
    out += printPtNode(edge.first) + "." + edge.second + "->" + printSet(targets);
  }
  return out;
}

AnalysisResult<PtGraph> runPointsToAnalysis(const Program& p, const SolveOptions& opts) {
  PointsToAnalysis client(p);
  return solve(p, client, opts);
}

}  // namespace ipa
