#include "ipa/liveness.hpp"

#include <algorithm>
#include <sstream>
#include <variant>

#include "ipa/sign.hpp"  // resolveByHierarchy

namespace ipa {

namespace {

// `after` is the liveness below an assignment to `lhs`; operands are demanded
// only when the target itself is demanded (strong liveness).
LiveSet assignFlow(const LiveSet& after, const std::string& lhs,
                   std::initializer_list<std::string> uses) {
  if (!after.count(lhs)) return after;
  LiveSet before = after;
  before.erase(lhs);
  before.insert(uses.begin(), uses.end());
  return before;
}

const std::vector<std::string>* callArgs(const Statement& s) {
  if (const auto* sc = std::get_if<StaticCall>(&s)) return &sc->args;
  if (const auto* vc = std::get_if<VirtualCall>(&s)) return &vc->args;
  return nullptr;
}

}  // namespace

LiveSet LivenessAnalysis::meet(const LiveSet& a, const LiveSet& b) {
  LiveSet r = a;
  r.insert(b.begin(), b.end());
  return r;
}

LiveSet LivenessAnalysis::normalFlow(const Context<LiveSet>& ctx, int node, const LiveSet& in) {
  const Statement& s = methodOf(ctx).nodes[node].stmt;
  return std::visit(
      [&](const auto& stmt) -> LiveSet {
        using T = std::decay_t<decltype(stmt)>;
        if constexpr (std::is_same_v<T, ConstAssign>) {
          return assignFlow(in, stmt.lhs, {});
        } else if constexpr (std::is_same_v<T, Copy>) {
          return assignFlow(in, stmt.lhs, {stmt.rhs});
        } else if constexpr (std::is_same_v<T, Neg>) {
          return assignFlow(in, stmt.lhs, {stmt.rhs});
        } else if constexpr (std::is_same_v<T, BinOp>) {
          return assignFlow(in, stmt.lhs, {stmt.left, stmt.right});
        } else if constexpr (std::is_same_v<T, NewObject>) {
          return assignFlow(in, stmt.lhs, {});
        } else if constexpr (std::is_same_v<T, LoadField>) {
          return assignFlow(in, stmt.lhs, {stmt.base});
        } else if constexpr (std::is_same_v<T, CastRef>) {
          return assignFlow(in, stmt.lhs, {stmt.rhs});
        } else if constexpr (std::is_same_v<T, NullAssign>) {
          return assignFlow(in, stmt.lhs, {});
        } else if constexpr (std::is_same_v<T, StaticLoad>) {
          return assignFlow(in, stmt.lhs, {});
        } else if constexpr (std::is_same_v<T, StoreField>) {
          // writes to the heap are observable regardless of local liveness
          LiveSet before = in;
          before.insert(stmt.base);
          before.insert(stmt.rhs);
          return before;
        } else if constexpr (std::is_same_v<T, StaticStore>) {
          LiveSet before = in;
          before.insert(stmt.rhs);
          return before;
        } else if constexpr (std::is_same_v<T, Return>) {
          // the returned variable is always demanded; whether any caller
          // consumes the result is tracked by the context key, not here
          LiveSet before = in;
          before.erase(kRetVar);
          before.insert(stmt.var);
          return before;
        } else {
          return in;  // Nop, Goto, condition-free Branch
        }
      },
      s);
}

LiveSet LivenessAnalysis::callEntryFlow(const Context<LiveSet>& ctx, int node, int,
                                        const LiveSet& in) {
  // Key for the callee context: of the callee's frame only the returned value
  // can be observed past its exit, through the call's result.
  LiveSet entry;
  if (in.count(definedVar(methodOf(ctx).nodes[node].stmt))) entry.insert(kRetVar);
  return entry;
}

LiveSet LivenessAnalysis::callExitFlow(const Context<LiveSet>& ctx, int node, int target,
                                       const LiveSet& exitValue) {
  // exitValue is the callee's liveness at its own entry: demand on a formal
  // becomes demand on the matching actual.
  const std::vector<std::string>* args = callArgs(methodOf(ctx).nodes[node].stmt);
  LiveSet out;
  if (!args) return out;
  const Method& callee = prog_.methods[target];
  size_t n = std::min(args->size(), callee.params.size());
  for (size_t i = 0; i < n; ++i) {
    if (exitValue.count(callee.params[i])) out.insert((*args)[i]);
  }
  return out;
}

LiveSet LivenessAnalysis::callLocalFlow(const Context<LiveSet>& ctx, int node, const LiveSet& in) {
  const Statement& s = methodOf(ctx).nodes[node].stmt;
  LiveSet out = in;
  out.erase(definedVar(s));
  if (const auto* vc = std::get_if<VirtualCall>(&s)) out.insert(vc->receiver);
  if (resolveByHierarchy(prog_, s).isDefault) {
    // unknown callee: assume it consumes every argument
    for (const std::string& v : usedVars(s)) out.insert(v);
  }
  return out;
}

CallResolution LivenessAnalysis::resolveTargets(const Context<LiveSet>& ctx, int node,
                                                const LiveSet&) {
  return resolveByHierarchy(prog_, methodOf(ctx).nodes[node].stmt);
}

std::string LivenessAnalysis::printValue(const LiveSet& v) {
  std::ostringstream os;
  os << '{';
  bool first = true;
  for (const std::string& x : v) {
    if (!first) os << ',';
    os << x;
    first = false;
  }
  os << '}';
  return os.str();
}

AnalysisResult<LiveSet> runLivenessAnalysis(const Program& p, SolveOptions opts) {
  opts.direction = Direction::Backward;
  LivenessAnalysis client(p);
  return solve(p, client, opts);
}

}  // namespace ipa
