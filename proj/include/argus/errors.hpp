#pragma once

#include <stdexcept>
#include <string>

namespace argus {

enum class Errc {
    // ingest / graph
    malformed_record,
    unknown_platform,
    unknown_resource,
    // findings
    unmappable_row,
    invalid_profile,
    // correlation
    unroutable_event,
    missing_resource,
    // playbooks / remediation
    parse_error,
    unknown_step_type,
    unknown_template_variable,
    approval_required,
    no_prior_dry_run,
    target_not_found,
    template_unresolved,
    already_redeemed,
    resource_missing,
    // risk / metrics
    empty_data,
    undefined_denominator,
    zero_baseline,
    zero_declared,
    checked_exceeds_declared,
    zero_reference_cost,
    insufficient_samples,
    empty_input,
    out_of_range,
    // simulator
    class_target_exhausted,
    // evidence store
    duplicate_event,
    storage_failure,
    // config
    bad_config,
};

/// Domain error carrying a machine-checkable code alongside the message.
class Error : public std::runtime_error {
public:
    Error(Errc code, const std::string& what) : std::runtime_error(what), code_(code) {}
    Errc code() const { return code_; }

private:
    Errc code_;
};

[[noreturn]] inline void fail(Errc code, const std::string& what) { throw Error(code, what); }

} // namespace argus
