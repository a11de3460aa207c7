"""Scenario parsing, check execution and report rendering"""
