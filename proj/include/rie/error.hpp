#pragma once

#include <stdexcept>
#include <string>

namespace rie {

/// Root of every error the toolkit throws. Catch this at tool boundaries.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

#define RIE_DECLARE_ERROR(Name)      \
  class Name : public Error {        \
   public:                           \
    using Error::Error;              \
  }

// audio-io
RIE_DECLARE_ERROR(UnsupportedFormat);
RIE_DECLARE_ERROR(CorruptFile);
RIE_DECLARE_ERROR(UpsampleRequested);
RIE_DECLARE_ERROR(SignalTooShort);

// features
RIE_DECLARE_ERROR(NameSetMismatch);

// corpus
RIE_DECLARE_ERROR(SchemaError);
RIE_DECLARE_ERROR(DuplicatePairId);
RIE_DECLARE_ERROR(InsufficientRaters);
RIE_DECLARE_ERROR(BadMagic);
RIE_DECLARE_ERROR(VersionMismatch);
RIE_DECLARE_ERROR(TruncatedFile);
RIE_DECLARE_ERROR(NonFiniteValue);
RIE_DECLARE_ERROR(IoError);

// regress
RIE_DECLARE_ERROR(TooFewSamples);
RIE_DECLARE_ERROR(SingularDesign);
RIE_DECLARE_ERROR(ConvergenceFailure);
RIE_DECLARE_ERROR(FeatureMismatch);

// nn
RIE_DECLARE_ERROR(DimensionMismatch);
RIE_DECLARE_ERROR(LayerCountMismatch);
RIE_DECLARE_ERROR(DivergenceDetected);
RIE_DECLARE_ERROR(FiniteCheckFailure);

// eval
RIE_DECLARE_ERROR(TooFewPairs);

// mllm
RIE_DECLARE_ERROR(TemplateNotFound);
RIE_DECLARE_ERROR(ProviderError);
RIE_DECLARE_ERROR(ParseError);
RIE_DECLARE_ERROR(RateLimited);

// cli / config
RIE_DECLARE_ERROR(UsageError);

#undef RIE_DECLARE_ERROR

}  // namespace rie
