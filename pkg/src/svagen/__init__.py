"""Signal-wise SystemVerilog assertion generation via tree self-refine search."""

__version__ = "0.1.0"
