"""
Services package: one module per simulator concern.
"""
