//! Acceptance criteria live in the `acceptance` test target.
