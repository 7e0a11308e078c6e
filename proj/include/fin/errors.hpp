#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>

namespace fin {

/// Root of every domain error thrown by the library.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// A signal for which a statistic is undefined (zero variance, all zeros).
class DegenerateSignal : public Error {
 public:
  using Error::Error;
};

class ShapeError : public Error {
 public:
  using Error::Error;
};

/// Training produced a non-finite loss.
class DivergedError : public Error {
 public:
  DivergedError(int epoch, const std::string& what)
      : Error("diverged at epoch " + std::to_string(epoch) + ": " + what), epoch_(epoch) {}
  int epoch() const noexcept { return epoch_; }

 private:
  int epoch_;
};

class CorruptArtifact : public Error {
 public:
  using Error::Error;
};

class UnsupportedVersion : public Error {
 public:
  using Error::Error;
};

/// Pretraining targets whose normalization range collapsed.
class CorpusDegenerateError : public Error {
 public:
  using Error::Error;
};

class IngestError : public Error {
 public:
  IngestError(std::size_t row, const std::string& what)
      : Error("row " + std::to_string(row) + ": " + what), row_(row) {}
  std::size_t row() const noexcept { return row_; }

 private:
  std::size_t row_;
};

class SplitError : public Error {
 public:
  using Error::Error;
};

/// Groups without internal spread; a variance test statistic is undefined.
class DegenerateGroups : public Error {
 public:
  using Error::Error;
};

class IoError : public Error {
 public:
  using Error::Error;
};

}  // namespace fin
