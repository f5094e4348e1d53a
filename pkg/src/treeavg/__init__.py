"""Exact tree averaging of constituency parser outputs, plus evaluation."""
