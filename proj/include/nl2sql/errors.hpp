#pragma once

#include <stdexcept>
#include <string>

namespace nl2sql {

// Root of the library's exception hierarchy. Every failure the library
// raises intentionally derives from Error so callers can catch one type
// at the CLI boundary and map it to an exit code.
class Error : public std::runtime_error {
 public:
  explicit Error(const std::string& what) : std::runtime_error(what) {}
};

// Malformed input that could not be parsed at all (JSON, CSV, config).
class ParseError : public Error {
 public:
  using Error::Error;
};

// Structurally parseable input that violates a referential constraint
// (dangling foreign key, duplicate column, bad table ordinal...).
class IntegrityError : public Error {
 public:
  using Error::Error;
};

// A question references a db_id missing from the loaded catalog.
class UnknownDatabaseError : public Error {
 public:
  using Error::Error;
};

// Ordinal lookup outside the schema's table/column range.
class OutOfRangeError : public Error {
 public:
  using Error::Error;
};

// A hard column selection filtered the schema down to nothing.
class EmptySelectionError : public Error {
 public:
  using Error::Error;
};

// Prompt construction requested content values but none were supplied.
class MissingContentError : public Error {
 public:
  using Error::Error;
};

// Underlying database file unreadable / not a database.
class StorageError : public Error {
 public:
  using Error::Error;
};

// A result key was requested for an execution that did not produce rows.
class NotExecutableError : public Error {
 public:
  using Error::Error;
};

// SQL reference extraction found neither a FROM/JOIN clause nor any
// known table name to anchor on.
class UnparseableError : public Error {
 public:
  using Error::Error;
};

// The embedding backend failed or returned a malformed vector.
class EmbedderError : public Error {
 public:
  using Error::Error;
};

// Transient transport-layer failure talking to a completion backend;
// retryable with backoff.
class TransportError : public Error {
 public:
  using Error::Error;
};

// The completion backend rejected the request for quota/rate reasons
// even after backoff; not retryable.
class QuotaError : public Error {
 public:
  using Error::Error;
};

// The completion backend answered, but the payload does not satisfy the
// wire contract (also used for replay misses, which name the digest).
class MalformedResponseError : public Error {
 public:
  using Error::Error;
};

// Candidate selection was invoked with no candidates.
class EmptyInputError : public Error {
 public:
  using Error::Error;
};

// A task is missing the gold SQL an operation requires.
class MissingGoldError : public Error {
 public:
  using Error::Error;
};

// No JSON array could be located in a completion text.
class NoJsonFoundError : public Error {
 public:
  using Error::Error;
};

// The gold SQL itself fails to execute, so correctness against it is
// undefined.
class GoldInvalidError : public Error {
 public:
  using Error::Error;
};

// Evaluation was asked to score a task with no prediction recorded.
class MissingPredictionError : public Error {
 public:
  using Error::Error;
};

// Invalid run configuration (maps to CLI exit code 2).
class ConfigError : public Error {
 public:
  using Error::Error;
};

// Filesystem-level failure (cannot open/write a path).
class IoError : public Error {
 public:
  using Error::Error;
};

}  // namespace nl2sql
