#pragma once

#include <set>
#include <string>

#include "ipa/engine.hpp"
#include "ipa/ir.hpp"

// Backward strongly-live-variables analysis. A value is the set of variables
// live at a point; meet is set union, so the empty set is the lattice top and
// values only grow. An assignment demands its operands only when its target
// is live after it; heap and static stores always demand their operands, and
// a return always demands the returned variable. At a call site the context
// key handed to the callee records whether the call's result is consumed
// ({$ret} or {}), and the callee's demand on its formals comes back as
// liveness of the matching actuals.

namespace ipa {

using LiveSet = std::set<std::string>;

class LivenessAnalysis : public AnalysisClient<LiveSet> {
 public:
  explicit LivenessAnalysis(const Program& p) : prog_(p) {}

  LiveSet topValue() override { return {}; }
  LiveSet boundaryValue(const Method&) override { return {}; }
  LiveSet meet(const LiveSet& a, const LiveSet& b) override;
  bool valuesEqual(const LiveSet& a, const LiveSet& b) override { return a == b; }
  LiveSet normalFlow(const Context<LiveSet>& ctx, int node, const LiveSet& in) override;
  LiveSet callEntryFlow(const Context<LiveSet>& ctx, int node, int target,
                        const LiveSet& in) override;
  LiveSet callExitFlow(const Context<LiveSet>& ctx, int node, int target,
                       const LiveSet& exitValue) override;
  LiveSet callLocalFlow(const Context<LiveSet>& ctx, int node, const LiveSet& in) override;
  CallResolution resolveTargets(const Context<LiveSet>& ctx, int node,
                                const LiveSet& in) override;
  std::string printValue(const LiveSet& v) override;

 private:
  const Method& methodOf(const Context<LiveSet>& ctx) const {
    return prog_.methods[ctx.method];
  }
  const Program& prog_;
};

// Runs the client with Direction::Backward regardless of opts.direction.
AnalysisResult<LiveSet> runLivenessAnalysis(const Program& p, SolveOptions opts = {});

}  // namespace ipa
