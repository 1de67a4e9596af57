/* C API for the uhg hypergraph learning toolkit.
 *
 * All functions return uhg_status; outputs are returned through pointers.
 * Handles are opaque and must be released with their matching _free call.
 * Strings returned through char** are heap-allocated; release them with
 * uhg_string_free. On any non-OK status, uhg_last_error() returns a
 * thread-local human-readable message.
 */
#ifndef UHG_H
#define UHG_H

#include <stdint.h>

#ifdef __cplusplus
extern "C" {
#endif

typedef enum uhg_status {
  UHG_OK = 0,
  UHG_ERR_INVALID_ARGUMENT = 1,
  UHG_ERR_PARSE = 2,
  UHG_ERR_NUMERIC = 3,
  UHG_ERR_IO = 4,
  UHG_ERR_INTERNAL = 5
} uhg_status;

typedef struct uhg_hypergraph uhg_hypergraph;
typedef struct uhg_dataset uhg_dataset;

const char* uhg_version(void);
const char* uhg_last_error(void);
void uhg_string_free(char* s);

/* ---- hypergraphs ---- */

/* JSON: {"num_vertices": n, "hyperedges": [[ids...], ...]} */
uhg_status uhg_hypergraph_from_json(const char* json, uhg_hypergraph** out);
uhg_status uhg_hypergraph_from_file(const char* path, uhg_hypergraph** out);
uhg_status uhg_hypergraph_to_json(const uhg_hypergraph* h, char** json_out);
void uhg_hypergraph_free(uhg_hypergraph* h);

int64_t uhg_hypergraph_num_vertices(const uhg_hypergraph* h);
int64_t uhg_hypergraph_num_edges(const uhg_hypergraph* h);
uhg_status uhg_hypergraph_add_self_loops(const uhg_hypergraph* h,
                                         uhg_hypergraph** out);

/* ---- isomorphism testing ---- */

/* Runs lockstep color refinement on the pair. On success, *distinguishable
 * is 1 when the vertex-color histograms split at some iteration (written to
 * *iteration), 0 when refinement stabilizes without a split. max_iters <= 0
 * selects the structural cap. */
uhg_status uhg_gwl_distinguish(const uhg_hypergraph* a,
                               const uhg_hypergraph* b, int max_iters,
                               int* distinguishable, int* iteration);

/* ---- datasets ---- */

uhg_status uhg_dataset_load(const char* path, uhg_dataset** out);
void uhg_dataset_free(uhg_dataset* d);
int64_t uhg_dataset_num_vertices(const uhg_dataset* d);
int64_t uhg_dataset_num_classes(const uhg_dataset* d);
int64_t uhg_dataset_feature_dim(const uhg_dataset* d);

/* ---- tasks ----
 *
 * One JSON-config entry point covering training and analysis. config_json is
 * an object with a "task" field:
 *
 *   train            {"task":"train","dataset":path,"config":{...}}
 *   train_inductive  {"task":"train_inductive","dataset":path,"config":{...}}
 *   sweep            {... "splits":N,"seeds":M,"jobs":K,"protocol":"transductive"}
 *   depth_sweep      {... "depths":[2,4,8]}
 *   ablate_selfloops {... }
 *   eval             {"task":"eval","dataset":path,"weights":stem,"mask":"test"}
 *   gradcheck        {"task":"gradcheck","ops":"all","seed":7,"trials":20}
 *   fixtures         {"task":"fixtures","out_dir":dir}
 *
 * "config" carries the training configuration (model spec, lr, epochs, ...);
 * missing keys take their documented defaults. The report JSON is returned
 * through report_json_out. A "train" task with "save_weights": stem writes
 * stem.bin and stem.json next to the report.
 */
uhg_status uhg_run(const char* config_json, char** report_json_out);

#ifdef __cplusplus
} /* extern "C" */
#endif

#endif /* UHG_H */
