#pragma once

#include <stdexcept>
#include <string>

namespace agentflow {

/// Base class of every error raised by the library.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

#define AGENTFLOW_DEFINE_ERROR(Name)    \
  class Name : public Error {           \
   public:                              \
    using Error::Error;                 \
  }

// messaging
AGENTFLOW_DEFINE_ERROR(InvalidTopic);
AGENTFLOW_DEFINE_ERROR(PayloadTooLarge);
AGENTFLOW_DEFINE_ERROR(UnknownSubscription);
AGENTFLOW_DEFINE_ERROR(InvalidNetworkModel);

// agents
AGENTFLOW_DEFINE_ERROR(ParentUnavailable);
AGENTFLOW_DEFINE_ERROR(UnknownAgent);
AGENTFLOW_DEFINE_ERROR(DuplicateAgent);

// logistics
AGENTFLOW_DEFINE_ERROR(MalformedRequest);

// election
AGENTFLOW_DEFINE_ERROR(InvalidCapacity);
AGENTFLOW_DEFINE_ERROR(InvalidLoad);
AGENTFLOW_DEFINE_ERROR(ElectionFailed);
AGENTFLOW_DEFINE_ERROR(PreconditionViolation);

// simulation / cli
AGENTFLOW_DEFINE_ERROR(ConfigError);
AGENTFLOW_DEFINE_ERROR(CorruptLog);

#undef AGENTFLOW_DEFINE_ERROR

}  // namespace agentflow
