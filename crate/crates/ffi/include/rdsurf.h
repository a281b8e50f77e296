#ifndef RDSURF_H
#define RDSURF_H

/* Generated by cbindgen from src/lib.rs; do not edit. */

#include <stddef.h>
#include <stdint.h>

#define RD_OK 0

#define RD_ERR_NULL_POINTER 1

#define RD_ERR_INVALID_UTF8 2

#define RD_ERR_PANIC 3

#define RD_ERR_OUT_OF_RANGE 4

#define RD_ERR_IO 10

#define RD_ERR_PARSE 11

#define RD_ERR_INVALID_MESH 12

#define RD_ERR_INVALID_ARGUMENT 13

#define RD_ERR_CONFIG 14

#define RD_ERR_NO_CONVERGENCE 15

#define RD_ERR_LINEAR_SOLVE 16

#define RD_ERR_NO_REAL_SOLUTION 17

#define RD_ERR_PRECONDITIONS 18

#define RD_ERR_DIFFUSION_CONSTRAINT 19

#define RD_ERR_COMPLEX_PARAMETER 20

#define RD_ERR_ZERO_MODE 21

#define RD_ERR_OTHER 99

// Boundary condition selector for `rd_eigen_solve`.
#define RD_BC_DIRICHLET 0

#define RD_BC_NEUMANN 1

#define RD_BC_CLOSED 2

// Eigenpairs of the Laplace-Beltrami operator on a mesh.
typedef struct RdBasis RdBasis;

// A validated triangle mesh.
typedef struct RdMesh RdMesh;

// A reaction-diffusion model with its parameters.
typedef struct RdModel RdModel;

#ifdef __cplusplus
extern "C" {
#endif // __cplusplus

// Copy the last error message of this thread into `buf` (NUL-terminated,
// truncated to `len`). Returns the full message length in bytes.
//
// # Safety
// `buf` must be null or point to `len` writable bytes.
size_t rd_last_error_message(char *buf, size_t len);

// Load an OFF or OBJ mesh.
//
// # Safety
// `path` must be a valid C string and `out` a valid pointer.
int32_t rd_mesh_load(const char *path, struct RdMesh **out);

// Planar `w x h` rectangle on an `nx x ny` grid.
//
// # Safety
// `out` must be a valid pointer.
int32_t rd_mesh_rectangle(double w, double h, size_t nx, size_t ny, struct RdMesh **out);

// # Safety
// `mesh` must be null or a handle from this library not yet freed.
void rd_mesh_free(struct RdMesh *mesh);

// # Safety
// `mesh` must be a live handle.
size_t rd_mesh_vertex_count(const struct RdMesh *mesh);

// # Safety
// `mesh` must be a live handle.
size_t rd_mesh_triangle_count(const struct RdMesh *mesh);

// Model by name (`murray` or `brusselator`) with default parameters.
//
// # Safety
// `name` must be a valid C string and `out` a valid pointer.
int32_t rd_model_new(const char *name, struct RdModel **out);

// # Safety
// `model` must be a live handle and `name` a valid C string.
int32_t rd_model_set_parameter(struct RdModel *model, const char *name, double value);

// # Safety
// `model` must be a live handle, `name` a valid C string and `out` valid.
int32_t rd_model_get_parameter(const struct RdModel *model, const char *name, double *out);

// # Safety
// `model` must be null or a handle from this library not yet freed.
void rd_model_free(struct RdModel *model);

// Continuation parameter value at which the eigenvalue `lambda` becomes
// marginally stable.
//
// # Safety
// `model` must be a live handle and `out` valid.
int32_t rd_bifurcation_parameter(const struct RdModel *model, double lambda, double *out);

// The `k` lowest eigenpairs on `mesh` with boundary condition `bc`
// (`RD_BC_*`).
//
// # Safety
// `mesh` must be a live handle and `out` valid.
int32_t rd_eigen_solve(const struct RdMesh *mesh,
                       int32_t bc,
                       size_t k,
                       uint64_t seed,
                       struct RdBasis **out);

// # Safety
// `basis` must be a live handle.
size_t rd_basis_len(const struct RdBasis *basis);

// # Safety
// `basis` must be a live handle and `out` valid.
int32_t rd_basis_eigenvalue(const struct RdBasis *basis, size_t index, double *out);

// Bifurcation point of the single mode `index`.
//
// # Safety
// `basis` and `model` must be live handles and `out_alpha` valid.
int32_t rd_compose_simple(const struct RdBasis *basis,
                          size_t index,
                          const struct RdModel *model,
                          double *out_alpha);

// # Safety
// `basis` must be null or a handle from this library not yet freed.
void rd_basis_free(struct RdBasis *basis);

#ifdef __cplusplus
}  // extern "C"
#endif  // __cplusplus

#endif  /* RDSURF_H */
