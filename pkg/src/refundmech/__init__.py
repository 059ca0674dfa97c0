"""Revenue-optimal deterministic refund mechanisms on discrete instances."""

from refundmech.audit import (
    AuditReport,
    BudgetExceeded,
    audit_menu,
    audit_result,
    brute_force,
    check_ic,
    check_ir,
    check_menu_size,
    check_monotonicity,
    check_q_condition,
    check_virtual_identity,
)
from refundmech.mechanism import (
    MenuOption,
    RefundMenu,
    ReturnPolicyTable,
    menu_from_allocation,
    menu_revenue,
    payments_from_allocation,
    q_value,
    return_policy_table,
    revenue,
)
from refundmech.model import (
    DiscreteInstance,
    GridSpec,
    InvalidInstanceError,
    OrderedItemInstance,
    UniformItemInstance,
    ValidationReport,
    cdf,
    cdf_strict,
    gen_ordered,
    gen_random,
    gen_uniform,
    sort_rows,
    to_discrete,
    validate_discrete,
    validate_ordered,
)
from refundmech.serialize import ParseError, emit_instance, parse_instance
from refundmech.sim import SimResult, simulate
from refundmech.solver import (
    SolveResult,
    solve,
    solve_capped,
    solve_general,
    solve_ordered,
    solve_ordered_capped,
    solve_uniform,
)
from refundmech.virtual import VirtualTable, virtual_welfare, weighted_virtual

__version__ = "0.1.0"
