/* Generated by cbindgen from crates/ffi/src/lib.rs. Do not edit. */

#ifndef SNN_DSE_H
#define SNN_DSE_H

#include <stdarg.h>
#include <stdbool.h>
#include <stddef.h>
#include <stdint.h>
#include <stdlib.h>

// Result code of every fallible call.
typedef enum SnnStatus {
  SNN_STATUS_OK = 0,
  SNN_STATUS_NULL_POINTER = 1,
  SNN_STATUS_INVALID_ARGUMENT = 2,
  SNN_STATUS_PARSE_ERROR = 3,
  SNN_STATUS_IO_ERROR = 4,
  SNN_STATUS_DIMENSION_MISMATCH = 5,
  SNN_STATUS_INTERNAL = 6,
} SnnStatus;

typedef enum SnnArch {
  SNN_ARCH_FPA = 0,
  SNN_ARCH_TMA = 1,
  SNN_ARCH_HA = 2,
} SnnArch;

typedef enum SnnMemOrg {
  SNN_MEM_ORG_CENTRALIZED = 0,
  SNN_MEM_ORG_LAYER_SHARED = 1,
  SNN_MEM_ORG_FULLY_DISTRIBUTED = 2,
} SnnMemOrg;

typedef enum SnnSelectorKind {
  SNN_SELECTOR_KIND_TERMINATE_DELTA = 0,
  SNN_SELECTOR_KIND_MAX_TERMINATE = 1,
} SnnSelectorKind;

// Opaque trained network.
typedef struct SnnNetwork SnnNetwork;

// Opaque technology constants.
typedef struct SnnTech SnnTech;

typedef struct SnnCostReport {
  double cycles;
  double contention;
  double latency_s;
  double energy_j;
  uint64_t memory_bits;
  double logic_cells;
  double registers;
  double cost;
} SnnCostReport;

// Output-class selector; `value` is the delta or the max count.
typedef struct SnnSelector {
  enum SnnSelectorKind kind;
  uint64_t value;
} SnnSelector;

#ifdef __cplusplus
extern "C" {
#endif // __cplusplus

// Library version as a static NUL-terminated string.
const char *snn_version(void);

// Copies the calling thread's last error message into `buf`.
//
// Returns the length including the terminating NUL; the copy is truncated to
// `capacity` bytes. Passing a null `buf` only queries the length.
size_t snn_last_error_message(char *buf, size_t capacity);

// Loads a network JSON file.
enum SnnStatus snn_network_load(const char *path, struct SnnNetwork **out_net);

// Parses a network from an in-memory JSON document.
enum SnnStatus snn_network_from_json(const char *json, struct SnnNetwork **out_net);

// Releases a network; null is ignored.
void snn_network_free(struct SnnNetwork *net);

// Number of entries in the layer-size vector (inputs included).
enum SnnStatus snn_network_depth(const struct SnnNetwork *net, size_t *out_depth);

// Copies the layer sizes into `sizes`, which must hold `capacity` entries.
enum SnnStatus snn_network_layer_sizes(const struct SnnNetwork *net,
                                       size_t *sizes,
                                       size_t capacity);

// Creates the built-in technology constants.
enum SnnStatus snn_tech_default(struct SnnTech **out_tech);

// Loads technology constants from a TOML file.
enum SnnStatus snn_tech_load(const char *path, struct SnnTech **out_tech);

// Releases technology constants; null is ignored.
void snn_tech_free(struct SnnTech *tech);

// Weight storage in bits for a topology given as `depth` layer sizes.
enum SnnStatus snn_memory_bits(const size_t *layer_sizes,
                               size_t depth,
                               uint32_t bits_per_weight,
                               uint64_t *out_bits);

// Processing cycles; `mean_spikes_in` holds `depth - 1` values.
enum SnnStatus snn_latency_cycles(enum SnnArch kind,
                                  const size_t *layer_sizes,
                                  size_t depth,
                                  const double *mean_spikes_in,
                                  double *out_cycles);

// Full cost evaluation of one design point. A null `tech` uses the defaults.
enum SnnStatus snn_evaluate(enum SnnArch kind,
                            enum SnnMemOrg org,
                            const struct SnnTech *tech,
                            const size_t *layer_sizes,
                            size_t depth,
                            const double *mean_spikes_in,
                            struct SnnCostReport *out_report);

// Runs one input pattern given as `count` parallel arrays of input neuron
// index and spike time.
//
// `spikes_in` receives one counter per computing layer and must hold
// `layers` entries; it may be null. A null `selector` uses Terminate Delta 4.
enum SnnStatus snn_run_inference(const struct SnnNetwork *net,
                                 const size_t *neurons,
                                 const double *times,
                                 size_t count,
                                 double window,
                                 const struct SnnSelector *selector,
                                 size_t *out_class,
                                 uint64_t *spikes_in,
                                 size_t layers);

#ifdef __cplusplus
}  // extern "C"
#endif  // __cplusplus

#endif  /* SNN_DSE_H */
