// Documented analysis failures. Each carries a stable name used in reports
// and by the CLI to select exit code 2.
#pragma once

#include <stdexcept>
#include <string>

namespace circlesync {

class AnalysisError : public std::runtime_error {
public:
  AnalysisError(std::string name, const std::string& what)
      : std::runtime_error(name + ": " + what), name_(std::move(name)) {}
  const std::string& name() const { return name_; }

private:
  std::string name_;
};

#define CIRCLESYNC_DEFINE_ERROR(Name)                                          \
  class Name : public AnalysisError {                                          \
  public:                                                                      \
    explicit Name(const std::string& what) : AnalysisError(#Name, what) {}     \
  }

CIRCLESYNC_DEFINE_ERROR(NonConvergence);
CIRCLESYNC_DEFINE_ERROR(MetricDegenerate);
CIRCLESYNC_DEFINE_ERROR(StructureMismatch);
CIRCLESYNC_DEFINE_ERROR(NotEquivariant);
CIRCLESYNC_DEFINE_ERROR(DegenerateConjugation);
CIRCLESYNC_DEFINE_ERROR(Inconclusive);
CIRCLESYNC_DEFINE_ERROR(NoContraction);
CIRCLESYNC_DEFINE_ERROR(ClusterCountMismatch);
CIRCLESYNC_DEFINE_ERROR(InvalidSampler);

#undef CIRCLESYNC_DEFINE_ERROR

}  // namespace circlesync
