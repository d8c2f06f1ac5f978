#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>

namespace tabfuse {

/// Base class for every data/contract error raised by the library. The CLI
/// maps these to exit code 2.
class Error : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

class ParseError : public Error {
public:
    ParseError(std::size_t line, const std::string& reason)
        : Error("line " + std::to_string(line) + ": " + reason), line_(line) {}
    std::size_t line() const noexcept { return line_; }

private:
    std::size_t line_;
};

class DuplicateIdError : public Error {
public:
    explicit DuplicateIdError(const std::string& id) : Error("duplicate id: " + id), id_(id) {}
    const std::string& id() const noexcept { return id_; }

private:
    std::string id_;
};

class DanglingLinkError : public Error {
public:
    DanglingLinkError(const std::string& segment_id, const std::string& passage_id)
        : Error("segment " + segment_id + " links unknown passage " + passage_id),
          segment_id_(segment_id), passage_id_(passage_id) {}
    const std::string& segment_id() const noexcept { return segment_id_; }
    const std::string& passage_id() const noexcept { return passage_id_; }

private:
    std::string segment_id_;
    std::string passage_id_;
};

class MalformedTableError : public Error {
public:
    using Error::Error;
};

class UnknownBlockError : public Error {
public:
    explicit UnknownBlockError(const std::string& id) : Error("unknown block: " + id) {}
};

class UnknownSegmentError : public Error {
public:
    explicit UnknownSegmentError(const std::string& id) : Error("unknown segment: " + id) {}
};

class UnknownQidError : public Error {
public:
    explicit UnknownQidError(const std::string& qid) : Error("unknown qid: " + qid) {}
};

class DimMismatchError : public Error {
public:
    DimMismatchError(std::size_t expected, std::size_t got)
        : Error("dimension mismatch: expected " + std::to_string(expected) + ", got " +
                std::to_string(got)) {}
};

class ShapeMismatchError : public Error {
public:
    using Error::Error;
};

class InvalidPartitionError : public Error {
public:
    using Error::Error;
};

class EmptyRankingError : public Error {
public:
    EmptyRankingError() : Error("ranking is empty") {}
};

class BudgetExceededError : public Error {
public:
    BudgetExceededError(std::size_t needed, std::size_t capacity)
        : Error("sequence of " + std::to_string(needed) + " tokens exceeds capacity " +
                std::to_string(capacity)) {}
};

/// Snapshot header/version mismatch or unreadable snapshot.
class SnapshotError : public Error {
public:
    using Error::Error;
};

class IoError : public Error {
public:
    using Error::Error;
};

}  // namespace tabfuse
