#pragma once

#include <cstddef>
#include <cstdint>
#include <stdexcept>
#include <string>
#include <vector>

namespace emcloud {

/// Root of every error the platform raises. The `code()` names the
/// failure kind and is what the gateway reports on the wire.
class Error : public std::runtime_error {
 public:
  Error(std::string code, const std::string& what)
      : std::runtime_error(what), code_(std::move(code)) {}

  const std::string& code() const noexcept { return code_; }

 private:
  std::string code_;
};

#define EMCLOUD_DEFINE_ERROR(Name)                                       \
  class Name : public Error {                                            \
   public:                                                               \
    explicit Name(const std::string& what) : Error(#Name, what) {}       \
  }

// event model / event cloud
EMCLOUD_DEFINE_ERROR(InvalidEvent);
EMCLOUD_DEFINE_ERROR(TypeMismatch);
EMCLOUD_DEFINE_ERROR(UnknownSubscription);
EMCLOUD_DEFINE_ERROR(InvalidRange);
EMCLOUD_DEFINE_ERROR(InvalidPattern);

// dcep
EMCLOUD_DEFINE_ERROR(OutOfOrder);
EMCLOUD_DEFINE_ERROR(InsufficientSamples);
EMCLOUD_DEFINE_ERROR(InvalidRuleSpec);

// orchestrator
EMCLOUD_DEFINE_ERROR(UnknownProcess);
EMCLOUD_DEFINE_ERROR(UnknownInstance);
EMCLOUD_DEFINE_ERROR(UnknownActivity);
EMCLOUD_DEFINE_ERROR(IllegalTransition);
EMCLOUD_DEFINE_ERROR(InvalidLoss);
EMCLOUD_DEFINE_ERROR(UnknownReservation);

// sar
EMCLOUD_DEFINE_ERROR(UnknownGapKind);
EMCLOUD_DEFINE_ERROR(UnknownProposal);
EMCLOUD_DEFINE_ERROR(ProposalClosed);
EMCLOUD_DEFINE_ERROR(UnknownAlternative);

// scenario
EMCLOUD_DEFINE_ERROR(SemanticError);
EMCLOUD_DEFINE_ERROR(MissingScriptedChoice);
EMCLOUD_DEFINE_ERROR(AbortedByOperator);

// gateway
EMCLOUD_DEFINE_ERROR(PortInUse);
EMCLOUD_DEFINE_ERROR(UnknownPoint);
EMCLOUD_DEFINE_ERROR(AlreadyDecided);

#undef EMCLOUD_DEFINE_ERROR

class DecodeError : public Error {
 public:
  DecodeError(std::size_t offset, const std::string& what)
      : Error("DecodeError", what + " (at byte " + std::to_string(offset) + ")"),
        offset_(offset) {}

  std::size_t offset() const noexcept { return offset_; }

 private:
  std::size_t offset_;
};

class SchemaError : public Error {
 public:
  SchemaError(std::string path, const std::string& what)
      : Error("SchemaError", path + ": " + what), path_(std::move(path)) {}

  const std::string& path() const noexcept { return path_; }

 private:
  std::string path_;
};

class MalformedProcess : public Error {
 public:
  explicit MalformedProcess(std::vector<std::string> violations);

  const std::vector<std::string>& violations() const noexcept { return violations_; }

 private:
  std::vector<std::string> violations_;
};

class InsufficientResources : public Error {
 public:
  InsufficientResources(const std::string& kind, std::int64_t requested,
                        std::int64_t available)
      : Error("InsufficientResources",
              "requested " + std::to_string(requested) + " " + kind + ", only " +
                  std::to_string(available) + " available"),
        available_(available) {}

  std::int64_t available() const noexcept { return available_; }

 private:
  std::int64_t available_;
};

}  // namespace emcloud
