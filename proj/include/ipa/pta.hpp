#pragma once

#include <functional>
#include <map>
#include <set>
#include <string>
#include <utility>

#include "ipa/engine.hpp"
#include "ipa/ir.hpp"

// Flow- and context-sensitive points-to analysis. A value is a graph: variable
// edges map locals to allocation sites (plus the SUMMARY node for statically
// unpredictable objects and an explicit NULL node), heap edges map (site,
// field) pairs to sites. Variables are updated strongly, heap fields weakly,
// and heap edges unreachable from the variables (and the context's entry
// roots) are garbage-collected after every transfer. Static fields live in a
// flow-insensitive global graph shared by all contexts; loads register the
// reading (context, node) pair and any growth of the global graph re-enqueues
// all registered readers. Virtual calls are resolved from the receiver's
// points-to set; a SUMMARY receiver or an undeclared procedure makes the site
// a default site, whose unknown callee is assumed to return SUMMARY and to
// overwrite every field reachable from the arguments.

namespace ipa {

struct PtNode {
  enum class Kind { Site, Summary, Null };

  Kind kind = Kind::Summary;
  int method = -1;    // Site only: index of the method containing the `new`
  std::string label;  // Site only: node label of the `new`

  static PtNode site(int method, std::string label) {
    return {Kind::Site, method, std::move(label)};
  }
  static PtNode summary() { return {Kind::Summary, -1, {}}; }
  static PtNode null() { return {Kind::Null, -1, {}}; }
  bool isSite() const { return kind == Kind::Site; }

  friend bool operator==(const PtNode&, const PtNode&) = default;
  friend auto operator<=>(const PtNode&, const PtNode&) = default;
};

using PtSet = std::set<PtNode>;

// Canonical form: no empty target sets; heap-edge sources are always sites
// and heap-edge targets never contain NULL. The empty graph is the lattice
// top; meet is componentwise union.
struct PtGraph {
  std::map<std::string, PtSet> varEdges;
  std::map<std::pair<PtNode, std::string>, PtSet> heapEdges;

  friend bool operator==(const PtGraph&, const PtGraph&) = default;
};

// Static-field bindings and the heap reachable from them. Grows monotonically
// over a run and is never garbage-collected.
struct GlobalPtGraph {
  std::map<std::pair<std::string, std::string>, PtSet> staticEdges;  // (class, field)
  std::map<std::pair<PtNode, std::string>, PtSet> heapEdges;
};

// Sites reachable from `roots` through the graph's heap edges (roots
// included; non-site roots are carried through untraversed).
PtSet reachableFrom(const PtGraph& g, const PtSet& roots);

// Removes heap edges whose source site is unreachable from the variable
// edges plus `extraRoots`.
void dropUnreachableHeap(PtGraph& g, const PtSet& extraRoots = {});

std::string printPtNode(const PtNode& n);
// Multi-line canonical form: `v -> {s1,s2}` lines, then `s.f -> {…}` lines.
std::string printPointsTo(const PtGraph& g);

class PointsToAnalysis : public AnalysisClient<PtGraph> {
 public:
  explicit PointsToAnalysis(const Program& p) : prog_(p) {}

  PtGraph topValue() override { return {}; }
  PtGraph boundaryValue(const Method&) override { return {}; }
  PtGraph meet(const PtGraph& a, const PtGraph& b) override;
  bool valuesEqual(const PtGraph& a, const PtGraph& b) override { return a == b; }
  PtGraph normalFlow(const Context<PtGraph>& ctx, int node, const PtGraph& in) override;
  PtGraph callEntryFlow(const Context<PtGraph>& ctx, int node, int target,
                        const PtGraph& in) override;
  PtGraph callExitFlow(const Context<PtGraph>& ctx, int node, int target,
                       const PtGraph& exitValue) override;
  PtGraph callLocalFlow(const Context<PtGraph>& ctx, int node, const PtGraph& in) override;
  CallResolution resolveTargets(const Context<PtGraph>& ctx, int node,
                                const PtGraph& in) override;
  std::string printValue(const PtGraph& v) override;
  void onSolveStart(std::function<void(int, int)> revisit) override;

  const GlobalPtGraph& global() const { return global_; }

 private:
  const Method& methodOf(const Context<PtGraph>& ctx) const {
    return prog_.methods[ctx.method];
  }
  void exportToGlobal(const std::string& klass, const std::string& field, const PtSet& values,
                      const PtGraph& g);

  const Program& prog_;
  GlobalPtGraph global_;
  std::set<std::pair<int, int>> staticReaders_;  // (context, node) of StaticLoads
  std::function<void(int, int)> revisit_;
};

AnalysisResult<PtGraph> runPointsToAnalysis(const Program& p, const SolveOptions& opts = {});

}  // namespace ipa
