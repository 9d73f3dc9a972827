#ifndef DIALOGGEN_ERRORS_HPP
#define DIALOGGEN_ERRORS_HPP

#include <stdexcept>
#include <string>

namespace dialoggen {

// Base class for every error raised by the library.
struct Error : std::runtime_error {
  using std::runtime_error::runtime_error;
};

// ---- gateway ----

struct UnknownTemplate : Error {
  std::string name;
  explicit UnknownTemplate(std::string n)
      : Error("unknown prompt template: " + n), name(std::move(n)) {}
};

struct MissingPlaceholder : Error {
  std::string placeholder;
  explicit MissingPlaceholder(std::string p)
      : Error("missing placeholder binding: " + p), placeholder(std::move(p)) {}
};

struct TransportError : Error {
  using Error::Error;
};

struct TimeoutError : TransportError {
  using TransportError::TransportError;
};

// Raised when a response that was requested as structured output cannot be
// parsed even after retries. The raw model text is retained for logging.
struct StructuredParseFailure : Error {
  std::string raw_text;
  explicit StructuredParseFailure(std::string raw)
      : Error("could not parse structured payload from model output"),
        raw_text(std::move(raw)) {}
};

struct ScriptExhausted : Error {
  std::string tag;
  explicit ScriptExhausted(std::string t)
      : Error("mock script exhausted for tag: " + t), tag(std::move(t)) {}
};

// ---- ingest ----

struct SchemaViolation : Error {
  std::size_t line;
  std::string reason;
  SchemaViolation(std::size_t l, std::string r)
      : Error("schema violation at line " + std::to_string(l) + ": " + r),
        line(l), reason(std::move(r)) {}
};

struct DuplicatePairId : Error {
  std::string pair_id;
  explicit DuplicatePairId(std::string id)
      : Error("duplicate pair_id: " + id), pair_id(std::move(id)) {}
};

struct EmptyConversation : Error {
  EmptyConversation() : Error("no turns survived cleaning") {}
};

// ---- knowledge ----

struct NoTopicsFound : Error {
  NoTopicsFound() : Error("topic extraction returned zero groups") {}
};

// ---- persona ----

struct EmptyPersona : Error {
  EmptyPersona() : Error("persona generation returned no usable traits or interests") {}
};

// ---- dialogue ----

struct SimulationAborted : Error {
  std::string topic;
  int turn;
  std::string cause;
  SimulationAborted(std::string t, int turn_index, std::string c)
      : Error("simulation aborted for topic '" + t + "' at turn " +
              std::to_string(turn_index) + ": " + c),
        topic(std::move(t)), turn(turn_index), cause(std::move(c)) {}
};

struct ValidationUnavailable : Error {
  ValidationUnavailable() : Error("validation report unavailable") {}
};

// ---- qa ----

struct QATargetUnreachable : Error {
  int accepted_count;
  explicit QATargetUnreachable(int accepted)
      : Error("qa generation stopped with " + std::to_string(accepted) +
              " accepted pairs"),
        accepted_count(accepted) {}
};

struct LengthMismatch : Error {
  LengthMismatch() : Error("prediction and gold lists differ in length") {}
};

// ---- metrics ----

struct EmptyText : Error {
  EmptyText() : Error("operation requires nonempty text") {}
};

struct TooFewTurns : Error {
  TooFewTurns() : Error("metric requires at least two turns") {}
};

// ---- cli / pipeline ----

struct ConfigInvalid : Error {
  std::string key;
  std::string reason;
  ConfigInvalid(std::string k, std::string r)
      : Error("invalid config key '" + k + "': " + r),
        key(std::move(k)), reason(std::move(r)) {}
};

struct ComponentMissing : Error {
  std::string component;
  explicit ComponentMissing(std::string c)
      : Error("record component missing: " + c), component(std::move(c)) {}
};

struct IOFailure : Error {
  using Error::Error;
};

}  // namespace dialoggen

#endif  // DIALOGGEN_ERRORS_HPP
