#ifndef STONESPEC_H
#define STONESPEC_H

/* Generated by cbindgen from crates/ffi/src/lib.rs; do not edit. */

#include <stdbool.h>
#include <stddef.h>
#include <stdint.h>

// Status codes; the first four match the command-line exit codes.
typedef enum StonespecStatus {
  STONESPEC_STATUS_OK = 0,
  STONESPEC_STATUS_PROPERTY_FAILURE = 1,
  STONESPEC_STATUS_INVALID_INPUT = 2,
  STONESPEC_STATUS_RESOURCE_CAP = 3,
  STONESPEC_STATUS_NULL_POINTER = 4,
  STONESPEC_STATUS_PANIC = 5,
} StonespecStatus;

// A finite lattice with its derived meet and join tables.
typedef struct StonespecLattice StonespecLattice;

// A Hermitian or general operator in `⊕_{k<m} M_n(ℂ)`.
typedef struct StonespecOperator StonespecOperator;

// A quasipoint: a block index and a unit ray in `ℂⁿ`.
typedef struct StonespecQuasipoint StonespecQuasipoint;

// Version of this interface; bumped on incompatible changes.
uint32_t stonespec_abi_version(void);

// Message for the most recent failure on this thread, or null. The pointer
// stays valid until the next call into this library from the same thread.
const char *stonespec_last_error(void);

// Releases a string returned by this library. Null is ignored.
//
// # Safety
// `s` must be null or a pointer previously returned through a `char **out`
// argument and not yet freed.
void stonespec_string_free(char *s);

// Parses a block operator `{"shape":{"m","n"},"blocks":[...]}`.
//
// # Safety
// `json` must be null or a NUL-terminated string; `out` must be null or writable.
enum StonespecStatus stonespec_operator_from_json(const char *json, struct StonespecOperator **out);

// # Safety
// `op` must be null or a handle from [`stonespec_operator_from_json`] not yet freed.
void stonespec_operator_free(struct StonespecOperator *op);

// Parses one quasipoint `{"block","ray"}` in the algebra of shape `(m, n)`.
//
// # Safety
// `json` must be null or a NUL-terminated string; `out` must be null or writable.
enum StonespecStatus stonespec_quasipoint_from_json(const char *json,
                                                    size_t m,
                                                    size_t n,
                                                    struct StonespecQuasipoint **out);

// # Safety
// `q` must be null or a handle from [`stonespec_quasipoint_from_json`] not yet freed.
void stonespec_quasipoint_free(struct StonespecQuasipoint *q);

// Block index of a quasipoint, or `SIZE_MAX` for a null handle.
//
// # Safety
// `q` must be null or a live quasipoint handle.
size_t stonespec_quasipoint_block(const struct StonespecQuasipoint *q);

// Writes the value of the observable function of the Hermitian `op` at `q`.
//
// # Safety
// Handles must be null or live; `out` must be null or writable.
enum StonespecStatus stonespec_observable_value(const struct StonespecOperator *op,
                                                const struct StonespecQuasipoint *q,
                                                double tol,
                                                double *out);

// Writes whether the block projection given as JSON belongs to `q`.
//
// # Safety
// `q` must be null or live; `projection_json` must be null or NUL-terminated;
// `out` must be null or writable.
enum StonespecStatus stonespec_quasipoint_contains(const struct StonespecQuasipoint *q,
                                                   const char *projection_json,
                                                   double tol,
                                                   bool *out);

// Parses a lattice `{"elements":[...],"leq":[[...]]}` and derives meets and joins.
//
// # Safety
// `json` must be null or a NUL-terminated string; `out` must be null or writable.
enum StonespecStatus stonespec_lattice_from_json(const char *json, struct StonespecLattice **out);

// # Safety
// `l` must be null or a handle from [`stonespec_lattice_from_json`] not yet freed.
void stonespec_lattice_free(struct StonespecLattice *l);

// Number of elements, or 0 for a null handle.
//
// # Safety
// `l` must be null or a live lattice handle.
size_t stonespec_lattice_len(const struct StonespecLattice *l);

// Maximal dual ideals as a JSON array of label arrays. Lattices with more
// than `cap` elements give [`StonespecStatus::ResourceCap`].
//
// # Safety
// `l` must be null or live; `out` must be null or writable.
enum StonespecStatus stonespec_lattice_ideals_json(const struct StonespecLattice *l,
                                                   size_t cap,
                                                   char **out);

// Prime-property violation at a seeded random quasipoint of `(m, n)`, as
// witness JSON. Requires `n ≥ 2`. Returns [`StonespecStatus::PropertyFailure`]
// with the JSON still written when the re-check disagrees.
//
// # Safety
// `out` must be null or writable.
enum StonespecStatus stonespec_witness_json(size_t m,
                                            size_t n,
                                            uint64_t seed,
                                            double tol,
                                            char **out);

// Runs one verification suite and writes its report as JSON. Returns
// [`StonespecStatus::PropertyFailure`] with the report written when any
// property fails.
//
// # Safety
// `suite` must be null or NUL-terminated; `out` must be null or writable.
enum StonespecStatus stonespec_verify_json(const char *suite,
                                           size_t m,
                                           size_t n,
                                           uint64_t seed,
                                           size_t trials,
                                           double tol,
                                           char **out);

#endif  /* STONESPEC_H */
